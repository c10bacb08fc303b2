#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ph2/point_cloud.hpp"

namespace ph2 {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

// Center the cloud at its centroid and scale so the largest point norm is 1.
// A cloud whose points all coincide is only centered.
PointCloud normalize(const PointCloud& cloud);

// Greedy farthest point sampling over a coordinate span. The first pick is
// the point farthest from the centroid, then each pick maximizes the minimum
// distance to the already-selected set. Ties resolve to the lexicographically
// smallest coordinate triple, then the smallest index, which makes the
// selected point set independent of input order.
std::vector<std::uint32_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m);
std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud, std::size_t m);

// Exact k-nearest-neighbor search by linear scan, center included.
// Distance ties break to the smaller point index.
NeighborSet knn(std::span<const Vec3> points, std::uint32_t center_index, std::size_t k);
NeighborSet knn(const PointCloud& cloud, std::uint32_t center_index, std::size_t k);

// Octant group of an offset: bit2 = (dx >= 0), bit1 = (dy >= 0), bit0 = (dz >= 0).
inline int octant_of(const Vec3& center, const Vec3& p) {
    const int bx = p[0] - center[0] >= 0.0 ? 1 : 0;
    const int by = p[1] - center[1] >= 0.0 ? 1 : 0;
    const int bz = p[2] - center[2] >= 0.0 ? 1 : 0;
    return (bx << 2) | (by << 1) | bz;
}

// Assign every neighbor except the center itself to one of 8 octant groups.
std::array<std::vector<std::uint32_t>, 8> octant_partition(std::span<const Vec3> points,
                                                           const NeighborSet& ns);
std::array<std::vector<std::uint32_t>, 8> octant_partition(const PointCloud& cloud,
                                                           const NeighborSet& ns);

PointCloud rotate_about_z(const PointCloud& cloud, double angle);
PointCloud rotate_about_axis(const PointCloud& cloud, Axis axis, double angle);

} // namespace ph2
