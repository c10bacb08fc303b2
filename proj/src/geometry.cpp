#include "ph2/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ph2/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ph2 {

namespace {

bool finite(const Vec3& p) {
    return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
}

// Candidate order for farthest point selection. Strictly total over distinct
// indices, so parallel reductions combine to the same winner in any order.
struct FpsCandidate {
    double dist = -1.0;
    Vec3 coords{0, 0, 0};
    std::uint32_t index = 0;
};

bool fps_better(const FpsCandidate& a, const FpsCandidate& b) {
    if (a.dist != b.dist) return a.dist > b.dist;
    if (a.coords != b.coords) return lex_less(a.coords, b.coords);
    return a.index < b.index;
}

} // namespace

PointCloud normalize(const PointCloud& cloud) {
    if (cloud.points.empty()) throw_invalid_input("normalize: empty point cloud");
    for (const Vec3& p : cloud.points) {
        if (!finite(p)) throw_invalid_input("normalize: non-finite coordinate");
    }

    Vec3 centroid{0, 0, 0};
    for (const Vec3& p : cloud.points) {
        centroid[0] += p[0];
        centroid[1] += p[1];
        centroid[2] += p[2];
    }
    const double inv_n = 1.0 / static_cast<double>(cloud.points.size());
    centroid[0] *= inv_n;
    centroid[1] *= inv_n;
    centroid[2] *= inv_n;

    PointCloud out;
    out.label = cloud.label;
    out.points.resize(cloud.points.size());
    double max_sq = 0.0;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        Vec3 q{cloud.points[i][0] - centroid[0], cloud.points[i][1] - centroid[1],
               cloud.points[i][2] - centroid[2]};
        max_sq = std::max(max_sq, q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
        out.points[i] = q;
    }
    if (max_sq > 0.0) {
        const double inv_r = 1.0 / std::sqrt(max_sq);
        for (Vec3& q : out.points) {
            q[0] *= inv_r;
            q[1] *= inv_r;
            q[2] *= inv_r;
        }
    }
    return out;
}

std::vector<std::uint32_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m) {
    const std::size_t n = points.size();
    if (n == 0) throw_invalid_input("farthest_point_sample: empty point set");
    if (m < 1 || m > n) throw_invalid_input("farthest_point_sample: m out of range");

    Vec3 centroid{0, 0, 0};
    for (const Vec3& p : points) {
        centroid[0] += p[0];
        centroid[1] += p[1];
        centroid[2] += p[2];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    centroid[0] *= inv_n;
    centroid[1] *= inv_n;
    centroid[2] *= inv_n;

    std::vector<std::uint32_t> selected;
    selected.reserve(m);
    // min_sq[i] = squared distance from point i to the selected set so far.
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    // Selected points must leave the candidate pool explicitly: a duplicate
    // of a selected point also sits at distance zero, and the lex tie-break
    // must choose among the unselected ones only.
    std::vector<char> taken(n, 0);

    for (std::size_t round = 0; round < m; ++round) {
        FpsCandidate best;
#ifdef _OPENMP
#pragma omp parallel
        {
            FpsCandidate local;
#pragma omp for nowait
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
                if (taken[i]) continue;
                double d = round == 0 ? squared_dist(points[i], centroid) : min_sq[i];
                FpsCandidate c{d, points[i], static_cast<std::uint32_t>(i)};
                if (fps_better(c, local)) local = c;
            }
#pragma omp critical(ph2_fps_reduce)
            {
                if (fps_better(local, best)) best = local;
            }
        }
#else
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            double d = round == 0 ? squared_dist(points[i], centroid) : min_sq[i];
            FpsCandidate c{d, points[i], static_cast<std::uint32_t>(i)};
            if (fps_better(c, best)) best = c;
        }
#endif
        selected.push_back(best.index);
        taken[best.index] = 1;
        if (round + 1 == m) break;
        const Vec3 chosen = points[best.index];
#ifdef _OPENMP
#pragma omp parallel for
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            min_sq[i] = std::min(min_sq[i], squared_dist(points[i], chosen));
        }
    }
    return selected;
}

std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud, std::size_t m) {
    return farthest_point_sample(std::span<const Vec3>(cloud.points), m);
}

NeighborSet knn(std::span<const Vec3> points, std::uint32_t center_index, std::size_t k) {
    const std::size_t n = points.size();
    if (center_index >= n) throw_invalid_input("knn: center index out of range");
    if (k < 1 || k > n) throw_invalid_input("knn: k out of range");

    const Vec3 c = points[center_index];
    // Bounded max-heap over (squared distance, index); the heap top is the
    // current worst of the best k under the same order the result uses.
    using Entry = std::pair<double, std::uint32_t>;
    auto worse = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    };
    std::vector<Entry> heap;
    heap.reserve(k + 1);
    for (std::uint32_t i = 0; i < n; ++i) {
        Entry e{squared_dist(points[i], c), i};
        if (heap.size() < k) {
            heap.push_back(e);
            std::push_heap(heap.begin(), heap.end(), worse);
        } else if (worse(e, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.back() = e;
            std::push_heap(heap.begin(), heap.end(), worse);
        }
    }
    std::sort(heap.begin(), heap.end(), worse);

    NeighborSet ns;
    ns.center_index = center_index;
    ns.neighbor_indices.reserve(k);
    for (const Entry& e : heap) ns.neighbor_indices.push_back(e.second);
    return ns;
}

NeighborSet knn(const PointCloud& cloud, std::uint32_t center_index, std::size_t k) {
    return knn(std::span<const Vec3>(cloud.points), center_index, k);
}

std::array<std::vector<std::uint32_t>, 8> octant_partition(std::span<const Vec3> points,
                                                           const NeighborSet& ns) {
    if (ns.center_index >= points.size())
        throw_invalid_input("octant_partition: center index out of range");
    const Vec3 c = points[ns.center_index];
    std::array<std::vector<std::uint32_t>, 8> groups;
    for (std::uint32_t idx : ns.neighbor_indices) {
        if (idx >= points.size()) throw_invalid_input("octant_partition: neighbor index out of range");
        if (idx == ns.center_index) continue;
        groups[octant_of(c, points[idx])].push_back(idx);
    }
    return groups;
}

std::array<std::vector<std::uint32_t>, 8> octant_partition(const PointCloud& cloud,
                                                           const NeighborSet& ns) {
    return octant_partition(std::span<const Vec3>(cloud.points), ns);
}

PointCloud rotate_about_axis(const PointCloud& cloud, Axis axis, double angle) {
    if (!std::isfinite(angle)) throw_invalid_input("rotate: non-finite angle");
    const double s = std::sin(angle);
    const double c = std::cos(angle);
    PointCloud out;
    out.label = cloud.label;
    out.points.resize(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        switch (axis) {
            case Axis::x:
                out.points[i] = {p[0], c * p[1] - s * p[2], s * p[1] + c * p[2]};
                break;
            case Axis::y:
                out.points[i] = {c * p[0] + s * p[2], p[1], -s * p[0] + c * p[2]};
                break;
            case Axis::z:
                out.points[i] = {c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]};
                break;
        }
    }
    return out;
}

PointCloud rotate_about_z(const PointCloud& cloud, double angle) {
    return rotate_about_axis(cloud, Axis::z, angle);
}

} // namespace ph2
