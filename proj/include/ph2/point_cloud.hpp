#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ph2 {

using Vec3 = std::array<double, 3>;

inline double squared_dist(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

// Lexicographic (x, y, z) comparison; the coordinate half of the
// deterministic tie-break used by sampling and neighbor search.
inline bool lex_less(const Vec3& a, const Vec3& b) {
    if (a[0] != b[0]) return a[0] < b[0];
    if (a[1] != b[1]) return a[1] < b[1];
    return a[2] < b[2];
}

struct PointCloud {
    std::vector<Vec3> points;
    std::optional<int> label;

    std::size_t size() const { return points.size(); }
};

// k nearest neighbors of one point, center included at distance zero.
struct NeighborSet {
    std::uint32_t center_index = 0;
    std::vector<std::uint32_t> neighbor_indices; // sorted by (distance, index)
};

} // namespace ph2
