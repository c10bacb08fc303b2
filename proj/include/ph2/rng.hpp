#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ph2 {

// All randomness in the project goes through mt19937_64 plus the helpers
// below. The engine is bit-specified by the standard and the transforms are
// hand-rolled, so seeded runs reproduce exactly across platforms and
// standard libraries (std::uniform_*_distribution would not).
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) (Lemire multiply-shift with rejection).
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
    if (n == 0) return 0;
    while (true) {
        std::uint64_t x = rng();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo >= n || lo >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
}

// Standard normal via Box-Muller; draws two uniforms per call.
inline double gaussian(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace ph2
