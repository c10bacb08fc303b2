#include "ph2/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "ph2/error.hpp"
#include "ph2/rng.hpp"

namespace ph2 {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

Vec3 sample_cross(Rng& rng) {
    const double a = uniform(rng, -0.8, 0.8);
    const double b = uniform(rng, -0.8, 0.8);
    if (bounded(rng, 2) == 0) return {a, 0.0, b}; // xz plane
    return {0.0, a, b};                           // yz plane
}

Vec3 sample_cube(Rng& rng) {
    const double h = 0.7;
    const std::uint64_t face = bounded(rng, 6);
    const double a = uniform(rng, -h, h);
    const double b = uniform(rng, -h, h);
    switch (face) {
        case 0: return {h, a, b};
        case 1: return {-h, a, b};
        case 2: return {a, h, b};
        case 3: return {a, -h, b};
        case 4: return {a, b, h};
        default: return {a, b, -h};
    }
}

Vec3 sample_sphere(Rng& rng) {
    while (true) {
        const double x = gaussian(rng);
        const double y = gaussian(rng);
        const double z = gaussian(rng);
        const double n = std::sqrt(x * x + y * y + z * z);
        if (n > 1e-9) return {0.8 * x / n, 0.8 * y / n, 0.8 * z / n};
    }
}

Vec3 sample_torus(Rng& rng) {
    const double R = 0.6, r = 0.25;
    const double u = uniform(rng, 0.0, kTau);
    const double v = uniform(rng, 0.0, kTau);
    return {(R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u),
            r * std::sin(v)};
}

} // namespace

PointCloud synthetic_cloud(int label, std::size_t points, double noise_sigma, std::uint64_t seed,
                           std::uint64_t index) {
    const int n_classes = static_cast<int>(synthetic_class_names().size());
    if (label < 0 || label >= n_classes) throw_invalid_input("synthetic_cloud: unknown class");
    if (points < 1) throw_invalid_input("synthetic_cloud: point count must be positive");
    if (!(noise_sigma >= 0.0)) throw_invalid_input("synthetic_cloud: negative noise");

    Rng rng(mix(mix(seed, static_cast<std::uint64_t>(label)), index));
    const double heading = uniform(rng, 0.0, kTau);
    const double ch = std::cos(heading), sh = std::sin(heading);

    PointCloud cloud;
    cloud.label = label;
    cloud.points.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        Vec3 p;
        switch (label) {
            case 0: p = sample_cross(rng); break;
            case 1: p = sample_cube(rng); break;
            case 2: p = sample_sphere(rng); break;
            default: p = sample_torus(rng); break;
        }
        const Vec3 rotated{ch * p[0] - sh * p[1], sh * p[0] + ch * p[1], p[2]};
        cloud.points.push_back({rotated[0] + noise_sigma * gaussian(rng),
                                rotated[1] + noise_sigma * gaussian(rng),
                                rotated[2] + noise_sigma * gaussian(rng)});
    }
    return cloud;
}

Dataset synthetic_dataset(std::size_t per_class, std::size_t points, double noise_sigma,
                          std::uint64_t seed, const std::string& split) {
    Dataset ds;
    ds.split = split;
    ds.class_names = synthetic_class_names();
    const std::uint64_t split_seed = mix(seed, fnv1a(split));
    for (int label = 0; label < ds.num_classes(); ++label) {
        for (std::size_t i = 0; i < per_class; ++i) {
            ds.clouds.push_back(synthetic_cloud(label, points, noise_sigma, split_seed, i));
            ds.sources.push_back(split + "/" + ds.class_names[static_cast<std::size_t>(label)] +
                                 "/" + std::to_string(i));
        }
    }
    return ds;
}

} // namespace ph2
