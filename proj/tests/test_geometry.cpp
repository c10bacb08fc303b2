#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "ph2/error.hpp"
#include "ph2/geometry.hpp"
#include "ph2/rng.hpp"
#include "ref.hpp"

using namespace ph2;

namespace {

PointCloud random_cloud(std::size_t n, Rng& rng, double scale = 1.0) {
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        c.points.push_back({uniform(rng, -scale, scale), uniform(rng, -scale, scale),
                            uniform(rng, -scale, scale)});
    return c;
}

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

} // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("normalize centers and scales to unit max norm") {
    PointCloud c;
    c.points = {{1, 1, 1}, {3, 1, 1}};
    PointCloud n = normalize(c);
    CHECK(n.points[0][0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(n.points[0][1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n.points[0][2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n.points[1][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize leaves a coincident cloud centered only") {
    PointCloud c;
    c.points = {{0, 0, 0}};
    PointCloud n = normalize(c);
    CHECK(n.points[0] == Vec3{0, 0, 0});

    PointCloud dup;
    dup.points = {{2, 3, 4}, {2, 3, 4}};
    PointCloud nd = normalize(dup);
    CHECK(norm(nd.points[0]) == doctest::Approx(0.0));
    CHECK(norm(nd.points[1]) == doctest::Approx(0.0));
}

TEST_CASE("normalize invariants on a random cloud") {
    Rng rng(11);
    PointCloud c = random_cloud(100, rng, 5.0);
    PointCloud n = normalize(c);

    Vec3 centroid{0, 0, 0};
    double max_norm = 0.0;
    for (const auto& p : n.points) {
        for (int a = 0; a < 3; ++a) centroid[a] += p[a];
        max_norm = std::max(max_norm, norm(p));
    }
    for (int a = 0; a < 3; ++a) centroid[a] /= static_cast<double>(n.size());
    CHECK(norm(centroid) < 1e-9);
    CHECK(max_norm > 1.0 - 1e-9);
    CHECK(max_norm < 1.0 + 1e-9);
}

TEST_CASE("normalize rejects non-finite coordinates") {
    PointCloud c;
    c.points = {{0, 0, 0}, {std::nan(""), 0, 0}};
    CHECK_THROWS_AS_MESSAGE(normalize(c), Error, doctest::Contains("finite"));
    try {
        normalize(c);
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_input);
    }
}

TEST_CASE("fps collinear tie-break picks the lexicographically smaller end") {
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    auto idx = farthest_point_sample(c, 2);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 0);
    CHECK(idx[1] == 3);
}

TEST_CASE("fps with m = N returns a permutation") {
    Rng rng(21);
    PointCloud c = random_cloud(40, rng);
    auto idx = farthest_point_sample(c, 40);
    std::vector<std::uint32_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t i = 0; i < 40; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("fps equals the brute-force oracle") {
    Rng rng(31);
    PointCloud c = random_cloud(50, rng);
    auto fast = farthest_point_sample(c, 10);
    auto slow = ref::fps_bruteforce(c.points, 10);
    CHECK(fast == slow);
}

TEST_CASE("fps exhaustive oracle agreement on small clouds") {
    Rng rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 2 + bounded(rng, 63);
        std::size_t m = 1 + bounded(rng, n);
        PointCloud c = random_cloud(n, rng);
        // Inject duplicates sometimes so the tie-break path is exercised.
        if (n > 4 && trial % 3 == 0) c.points[n - 1] = c.points[0];
        CAPTURE(trial);
        CHECK(farthest_point_sample(c, m) == ref::fps_bruteforce(c.points, m));
    }
}

TEST_CASE("fps rejects m > N and m = 0") {
    Rng rng(51);
    PointCloud c = random_cloud(5, rng);
    CHECK_THROWS_AS(farthest_point_sample(c, 6), Error);
    try {
        farthest_point_sample(c, 6);
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_input);
    }
}

TEST_CASE("fps is input-order independent at the point-set level") {
    Rng rng(61);
    PointCloud c = random_cloud(30, rng);
    PointCloud shuffled = c;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled.points[i - 1], shuffled.points[bounded(rng, i)]);

    auto a = farthest_point_sample(c, 12);
    auto b = farthest_point_sample(shuffled, 12);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(c.points[a[i]] == shuffled.points[b[i]]);
    }
}

TEST_CASE("knn trivial distances") {
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
    NeighborSet ns = knn(c, 0, 2);
    REQUIRE(ns.neighbor_indices.size() == 2);
    CHECK(ns.neighbor_indices[0] == 0);
    CHECK(ns.neighbor_indices[1] == 1);
    CHECK(ns.center_index == 0);
}

TEST_CASE("knn with k = N returns every index") {
    Rng rng(71);
    PointCloud c = random_cloud(17, rng);
    NeighborSet ns = knn(c, 3, 17);
    std::vector<std::uint32_t> sorted = ns.neighbor_indices;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t i = 0; i < 17; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("knn matches the linear-scan oracle") {
    Rng rng(81);
    PointCloud c = random_cloud(200, rng);
    for (std::uint32_t center : {0u, 57u, 199u}) {
        NeighborSet ns = knn(c, center, 32);
        auto oracle = ref::knn_linear(c.points, center, 32);
        CHECK(ns.neighbor_indices == oracle);
    }
}

TEST_CASE("knn distance ties resolve to the smaller index") {
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
    NeighborSet ns = knn(c, 0, 2);
    CHECK(ns.neighbor_indices[0] == 0);
    CHECK(ns.neighbor_indices[1] == 1);
}

TEST_CASE("knn is permutation-covariant") {
    Rng rng(91);
    PointCloud c = random_cloud(60, rng);
    std::vector<std::uint32_t> perm(60);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[bounded(rng, i)]);

    PointCloud p;
    p.points.resize(60);
    for (std::size_t i = 0; i < 60; ++i) p.points[perm[i]] = c.points[i];

    NeighborSet a = knn(c, 7, 9);
    NeighborSet b = knn(p, perm[7], 9);
    std::set<std::uint32_t> expected;
    for (auto i : a.neighbor_indices) expected.insert(perm[i]);
    std::set<std::uint32_t> got(b.neighbor_indices.begin(), b.neighbor_indices.end());
    CHECK(expected == got);
}

TEST_CASE("knn rejects k out of range") {
    Rng rng(101);
    PointCloud c = random_cloud(5, rng);
    CHECK_THROWS_AS(knn(c, 0, 6), Error);
    CHECK_THROWS_AS(knn(c, 0, 0), Error);
}

TEST_CASE("octant encoding of sign patterns") {
    Vec3 center{0, 0, 0};
    CHECK(octant_of(center, {1, -1, 1}) == 5);
    CHECK(octant_of(center, {0, 0, 0}) == 7);
    CHECK(octant_of(center, {-1, -1, -1}) == 0);
    CHECK(octant_of(center, {1, 1, 1}) == 7);
    CHECK(octant_of(center, {-1, 1, -1}) == 2);
    CHECK(octant_of(center, {1, -1, -1}) == 4);
    CHECK(ref::octant_bruteforce(center, {1, -1, 1}) == 5);
}

TEST_CASE("octant partition excludes the center and covers everything else") {
    Rng rng(111);
    PointCloud c = random_cloud(64, rng);
    NeighborSet ns = knn(c, 10, 32);
    auto groups = octant_partition(c, ns);

    std::size_t total = 0;
    std::set<std::uint32_t> seen;
    for (int g = 0; g < 8; ++g) {
        total += groups[g].size();
        for (auto i : groups[g]) {
            CHECK(i != 10);
            CHECK(ref::octant_bruteforce(c.points[10], c.points[i]) == g);
            seen.insert(i);
        }
    }
    CHECK(total == 31);
    CHECK(seen.size() == 31);
    for (auto i : ns.neighbor_indices)
        if (i != 10) CHECK(seen.count(i) == 1);
}

TEST_CASE("duplicate of the center lands in group 7") {
    PointCloud c;
    c.points = {{1, 2, 3}, {1, 2, 3}, {0, 0, 0}};
    NeighborSet ns = knn(c, 0, 3);
    auto groups = octant_partition(c, ns);
    REQUIRE(groups[7].size() >= 1);
    CHECK(std::find(groups[7].begin(), groups[7].end(), 1u) != groups[7].end());
}

TEST_CASE("rotate_about_z quarter turn") {
    PointCloud c;
    c.points = {{1, 0, 0}};
    PointCloud r = rotate_about_z(c, std::acos(-1.0) / 2.0);
    CHECK(r.points[0][0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.points[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.points[0][2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation by zero is the identity") {
    Rng rng(121);
    PointCloud c = random_cloud(25, rng);
    PointCloud r = rotate_about_z(c, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < 3; ++a) CHECK(r.points[i][a] == doctest::Approx(c.points[i][a]));
}

TEST_CASE("eight eighth-turns compose to the identity") {
    Rng rng(131);
    PointCloud c = random_cloud(25, rng);
    PointCloud r = c;
    const double step = std::acos(-1.0) / 4.0;
    for (int i = 0; i < 8; ++i) r = rotate_about_z(r, step);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < 3; ++a) CHECK(std::abs(r.points[i][a] - c.points[i][a]) < 1e-9);
}

TEST_CASE("rotation preserves norms and pairwise distances") {
    Rng rng(141);
    PointCloud c = random_cloud(30, rng);
    PointCloud r = rotate_about_z(c, 1.234567);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(std::abs(norm(r.points[i]) - norm(c.points[i])) < 1e-12);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j)
            CHECK(std::abs(std::sqrt(squared_dist(r.points[i], r.points[j])) -
                           std::sqrt(squared_dist(c.points[i], c.points[j]))) < 1e-12);
}

TEST_CASE("axis rotations agree with the z special case and permute axes") {
    Rng rng(151);
    PointCloud c = random_cloud(10, rng);
    PointCloud a = rotate_about_axis(c, Axis::z, 0.7);
    PointCloud b = rotate_about_z(c, 0.7);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int ax = 0; ax < 3; ++ax) CHECK(a.points[i][ax] == doctest::Approx(b.points[i][ax]));

    PointCloud x;
    x.points = {{0, 1, 0}};
    PointCloud rx = rotate_about_axis(x, Axis::x, std::acos(-1.0) / 2.0);
    CHECK(rx.points[0][2] == doctest::Approx(1.0).epsilon(1e-12));
    PointCloud y;
    y.points = {{0, 0, 1}};
    PointCloud ry = rotate_about_axis(y, Axis::y, std::acos(-1.0) / 2.0);
    CHECK(ry.points[0][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_SUITE_END();
