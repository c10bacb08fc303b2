#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "doctest.h"
#include "ph2/error.hpp"
#include "ph2/feature_tree.hpp"
#include "ph2/geometry.hpp"
#include "ph2/model_io.hpp"
#include "ph2/rng.hpp"
#include "ph2/synthetic.hpp"
#include "ref.hpp"

using namespace ph2;

namespace {

PointCloud random_cloud(std::size_t n, Rng& rng) {
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        c.points.push_back({gaussian(rng), gaussian(rng), gaussian(rng)});
    return c;
}

Eigen::MatrixXd coords_of(std::span<const Vec3> pts) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int a = 0; a < 3; ++a) m(static_cast<Eigen::Index>(i), a) = pts[i][a];
    return m;
}

TreeConfig toy_config() {
    TreeConfig cfg;
    cfg.num_hops = 2;
    cfg.k_per_hop = {8, 6};
    cfg.points_per_hop = {64, 32};
    // Sits in the middle of the first-stage spectrum on gaussian clouds, so
    // fitted toy trees mix expanded and leaf channels at hop 0.
    cfg.energy_threshold = 0.04;
    return cfg;
}

// Identify a node across independently fitted trees by its channel path.
std::string node_path(const FeatureTree& tree, const TreeNode& n) {
    std::string path = std::to_string(n.channel_index);
    std::int32_t p = n.parent_id;
    while (p >= 0) {
        const TreeNode& up = tree.nodes[static_cast<std::size_t>(p)];
        path = std::to_string(up.channel_index) + "/" + path;
        p = up.parent_id;
    }
    return path;
}

} // namespace

TEST_SUITE_BEGIN("feature_tree");

TEST_CASE("attribute row of a center with one neighbor per octant") {
    // Corner g sits in octant g, so the pooled row is the corners laid out
    // in octant order.
    PointCloud c;
    c.points.push_back({0, 0, 0});
    for (int g = 0; g < 8; ++g) {
        const double x = (g & 4) ? 1.0 : -1.0;
        const double y = (g & 2) ? 1.0 : -1.0;
        const double z = (g & 1) ? 1.0 : -1.0;
        c.points.push_back({x, y, z});
    }
    std::vector<std::uint32_t> centers{0};
    Eigen::MatrixXd attrs = build_attributes(c.points, centers, 9, coords_of(c.points));

    REQUIRE(attrs.rows() == 1);
    REQUIRE(attrs.cols() == 24);
    for (int g = 0; g < 8; ++g) {
        CHECK(attrs(0, g * 3 + 0) == ((g & 4) ? 1.0 : -1.0));
        CHECK(attrs(0, g * 3 + 1) == ((g & 2) ? 1.0 : -1.0));
        CHECK(attrs(0, g * 3 + 2) == ((g & 1) ? 1.0 : -1.0));
    }
}

TEST_CASE("neighbors concentrated in one octant leave seven zero blocks") {
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 1, 1}, {2, 1, 1}, {1, 2, 1}};
    std::vector<std::uint32_t> centers{0};
    Eigen::MatrixXd attrs = build_attributes(c.points, centers, 4, coords_of(c.points));

    for (int g = 0; g < 7; ++g)
        for (int a = 0; a < 3; ++a) CHECK(attrs(0, g * 3 + a) == 0.0);
    CHECK(attrs(0, 21) == doctest::Approx(4.0 / 3.0));
    CHECK(attrs(0, 22) == doctest::Approx(4.0 / 3.0));
    CHECK(attrs(0, 23) == doctest::Approx(1.0));
}

TEST_CASE("attribute rows match the naive recomputation oracle") {
    Rng rng(5);
    PointCloud c = random_cloud(80, rng);
    auto centers = farthest_point_sample(c, 40);

    SUBCASE("three-dimensional attributes") {
        Eigen::MatrixXd fast = build_attributes(c.points, centers, 16, coords_of(c.points));
        ref::Matrix pa(80, 3);
        for (std::size_t i = 0; i < 80; ++i)
            for (int a = 0; a < 3; ++a) pa.at(i, static_cast<std::size_t>(a)) = c.points[i][a];
        ref::Matrix slow = ref::attributes_naive(c.points, pa, centers, 16);
        REQUIRE(fast.rows() == 40);
        REQUIRE(fast.cols() == 24);
        for (Eigen::Index r = 0; r < fast.rows(); ++r)
            for (Eigen::Index k = 0; k < fast.cols(); ++k)
                CHECK(std::abs(fast(r, k) - slow.at(static_cast<std::size_t>(r),
                                                    static_cast<std::size_t>(k))) < 1e-12);
    }

    SUBCASE("scalar attributes") {
        Eigen::MatrixXd vals(80, 1);
        for (int i = 0; i < 80; ++i) vals(i, 0) = gaussian(rng);
        Eigen::MatrixXd fast = build_attributes(c.points, centers, 12, vals);
        ref::Matrix pa(80, 1);
        for (std::size_t i = 0; i < 80; ++i) pa.at(i, 0) = vals(static_cast<Eigen::Index>(i), 0);
        ref::Matrix slow = ref::attributes_naive(c.points, pa, centers, 12);
        REQUIRE(fast.cols() == 8);
        for (Eigen::Index r = 0; r < fast.rows(); ++r)
            for (Eigen::Index k = 0; k < fast.cols(); ++k)
                CHECK(std::abs(fast(r, k) - slow.at(static_cast<std::size_t>(r),
                                                    static_cast<std::size_t>(k))) < 1e-12);
    }
}

TEST_CASE("config validation rejects inconsistent settings") {
    TreeConfig cfg = toy_config();
    CHECK_NOTHROW(cfg.validate());

    TreeConfig bad = cfg;
    bad.k_per_hop = {8};
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.points_per_hop = {32, 64};
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.k_per_hop = {8, 40};
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.energy_threshold = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.energy_threshold = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.aggregations = {Aggregation::max, Aggregation::mean};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.aggregations = {Aggregation::mean, Aggregation::mean};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.aggregations = {};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fit_tree needs at least two clouds") {
    Rng rng(15);
    std::vector<PointCloud> one{random_cloud(64, rng)};
    CHECK_THROWS_AS(fit_tree(one, toy_config()), Error);
    try {
        fit_tree(one, toy_config());
    } catch (const Error& e) {
        CHECK(e.kind() == errc::insufficient_data);
    }
}

TEST_CASE("saturating threshold keeps all 24 first-stage channels as leaves") {
    Rng rng(25);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 4; ++i) clouds.push_back(random_cloud(64, rng));
    TreeConfig cfg = toy_config();
    cfg.energy_threshold = 1.0;
    FeatureTree tree = fit_tree(clouds, cfg);

    CHECK(tree.nodes.size() == 24);
    CHECK(tree.leaf_count() == 24);
    CHECK(tree.banks.empty());
    for (const TreeNode& n : tree.nodes) {
        CHECK(n.hop_index == 0);
        CHECK(!n.is_internal);
    }
    CHECK(tree.feature_dim() == 48);
    CHECK(std::abs(tree.leaf_energy_sum() - 1.0) < 1e-9);
}

TEST_CASE("two-hop fit and transform match a hand-unrolled cascade") {
    Rng rng(35);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 3; ++i) clouds.push_back(random_cloud(64, rng));
    const TreeConfig cfg = toy_config();
    FeatureTree tree = fit_tree(clouds, cfg);

    // Stage 1 by hand: normalize, sample, pool 24-dim rows, fit one bank
    // with the per-cloud accumulate plus in-order merge the tree uses.
    const int nc = 3;
    std::vector<std::vector<Vec3>> pool0(nc);
    std::vector<std::vector<std::uint32_t>> centers0(nc);
    std::vector<Eigen::MatrixXd> attrs0(nc);
    SaabAccumulator acc0(24);
    for (int c = 0; c < nc; ++c) {
        pool0[c] = normalize(clouds[c]).points;
        centers0[c] = farthest_point_sample(std::span<const Vec3>(pool0[c]), 64);
        attrs0[c] = build_attributes(pool0[c], centers0[c], 8, coords_of(pool0[c]));
        SaabAccumulator part(24);
        part.accumulate(attrs0[c]);
        acc0.merge(part);
    }
    SaabFilterBank root = acc0.finalize();
    Eigen::VectorXd root_energy = channel_energies(root, 1.0);

    CHECK((tree.root_bank.eigenvalues - root.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
    CHECK((tree.root_bank.ac_weights - root.ac_weights).cwiseAbs().maxCoeff() == 0.0);

    std::vector<Eigen::MatrixXd> coeffs0(nc);
    std::vector<std::vector<Vec3>> pool1(nc);
    std::vector<std::vector<std::uint32_t>> centers1(nc);
    for (int c = 0; c < nc; ++c) {
        coeffs0[c] = apply_saab(root, attrs0[c]);
        for (std::uint32_t ci : centers0[c]) pool1[c].push_back(pool0[c][ci]);
        centers1[c] = farthest_point_sample(std::span<const Vec3>(pool1[c]), 32);
    }

    // Stage 2 per surviving channel; walk the real node table alongside.
    std::size_t cursor = 0;
    double manual_leaf_sum = 0.0;
    std::vector<double> manual_features; // cloud 0, pre-order leaves x aggs
    int internal_channels = 0;
    for (int ch = 0; ch < 24; ++ch) {
        REQUIRE(cursor < tree.nodes.size());
        const TreeNode& node = tree.nodes[cursor++];
        CHECK(node.hop_index == 0);
        CHECK(node.channel_index == ch);
        CHECK(node.parent_id == -1);
        CHECK(node.energy == root_energy(ch));

        const bool expand = root_energy(ch) >= cfg.energy_threshold;
        CHECK(node.is_internal == expand);
        if (!expand) {
            manual_leaf_sum += root_energy(ch);
            manual_features.push_back(coeffs0[0].col(ch).mean());
            manual_features.push_back(coeffs0[0].col(ch).maxCoeff());
            continue;
        }
        ++internal_channels;

        SaabAccumulator acc1(8);
        std::vector<Eigen::MatrixXd> attrs1(nc);
        for (int c = 0; c < nc; ++c) {
            attrs1[c] = build_attributes(pool1[c], centers1[c], 6, coeffs0[c].col(ch));
            SaabAccumulator part(8);
            part.accumulate(attrs1[c]);
            acc1.merge(part);
        }
        SaabFilterBank bank = acc1.finalize();
        Eigen::VectorXd child_energy = channel_energies(bank, root_energy(ch));
        Eigen::MatrixXd child_coeffs0 = apply_saab(bank, attrs1[0]);

        for (int cc = 0; cc < 8; ++cc) {
            REQUIRE(cursor < tree.nodes.size());
            const TreeNode& child = tree.nodes[cursor++];
            CHECK(child.hop_index == 1);
            CHECK(child.channel_index == cc);
            CHECK(tree.nodes[static_cast<std::size_t>(child.parent_id)].node_id == node.node_id);
            CHECK(!child.is_internal);
            CHECK(std::abs(child.energy - child_energy(cc)) < 1e-15);
            manual_leaf_sum += child_energy(cc);
            manual_features.push_back(child_coeffs0.col(cc).mean());
            manual_features.push_back(child_coeffs0.col(cc).maxCoeff());
        }
    }
    CHECK(cursor == tree.nodes.size());
    CHECK(internal_channels > 0);
    CHECK(internal_channels < 24);
    CHECK(std::abs(manual_leaf_sum - 1.0) < 1e-9);
    CHECK(std::abs(tree.leaf_energy_sum() - 1.0) < 1e-9);

    GlobalFeature f = transform(tree, clouds[0]);
    REQUIRE(f.values.size() == manual_features.size());
    REQUIRE(f.values.size() == tree.feature_dim());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        CHECK(std::abs(f.values[i] - manual_features[i]) < 1e-12);

    REQUIRE(f.provenance.size() == f.values.size());
    CHECK(f.provenance[0].aggregation == Aggregation::mean);
    CHECK(f.provenance[1].aggregation == Aggregation::max);
    CHECK(f.provenance[0].leaf_node_id == tree.leaf_order[0]);
}

TEST_CASE("children energies sum to their parent energy") {
    Rng rng(45);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 4; ++i) clouds.push_back(random_cloud(64, rng));
    FeatureTree tree = fit_tree(clouds, toy_config());

    std::vector<double> child_sum(tree.nodes.size(), 0.0);
    double top_sum = 0.0;
    for (const TreeNode& n : tree.nodes) {
        if (n.parent_id < 0)
            top_sum += n.energy;
        else
            child_sum[static_cast<std::size_t>(n.parent_id)] += n.energy;
    }
    CHECK(std::abs(top_sum - 1.0) < 1e-12);
    for (const TreeNode& n : tree.nodes)
        if (n.is_internal)
            CHECK(std::abs(child_sum[n.node_id] - n.energy) < 1e-12);
}

TEST_CASE("raising the threshold only prunes, never invents structure") {
    Rng rng(55);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 4; ++i) clouds.push_back(random_cloud(64, rng));

    TreeConfig loose = toy_config();
    loose.energy_threshold = 0.002;
    TreeConfig tight = toy_config();
    tight.energy_threshold = 0.05;

    FeatureTree big = fit_tree(clouds, loose);
    FeatureTree small = fit_tree(clouds, tight);
    CHECK(big.leaf_count() >= small.leaf_count());

    std::set<std::string> big_internal;
    for (const TreeNode& n : big.nodes)
        if (n.is_internal) big_internal.insert(node_path(big, n));
    for (const TreeNode& n : small.nodes)
        if (n.is_internal) CHECK(big_internal.count(node_path(small, n)) == 1);
}

TEST_CASE("transform is invariant under point permutation") {
    Rng rng(65);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 3; ++i) clouds.push_back(random_cloud(96, rng));
    FeatureTree tree = fit_tree(clouds, toy_config());

    for (int trial = 0; trial < 5; ++trial) {
        PointCloud c = random_cloud(96, rng);
        PointCloud shuffled = c;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled.points[i - 1], shuffled.points[bounded(rng, i)]);
        GlobalFeature a = transform(tree, c);
        GlobalFeature b = transform(tree, shuffled);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
            max_diff = std::max(max_diff, std::abs(a.values[i] - b.values[i]));
        CAPTURE(trial);
        CHECK(max_diff <= 1e-9);
    }
}

TEST_CASE("undersized clouds clamp the cascade instead of duplicating points") {
    Rng rng(75);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 3; ++i) clouds.push_back(random_cloud(64, rng));
    FeatureTree tree = fit_tree(clouds, toy_config());

    // Well below points_per_hop[0], and below k_per_hop[0] as well for the
    // 5-point cloud, so both the FPS target and k take their clamped paths.
    for (std::size_t n : {40u, 5u}) {
        PointCloud tiny = random_cloud(n, rng);
        GlobalFeature f = transform(tree, tiny);
        CHECK(f.values.size() == tree.feature_dim());
        for (double v : f.values) CHECK(std::isfinite(v));

        // No index-dependent padding means invariance holds at any size, not
        // just at divisors of the hop target.
        PointCloud shuffled = tiny;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled.points[i - 1], shuffled.points[bounded(rng, i)]);
        GlobalFeature a = transform(tree, tiny);
        GlobalFeature b = transform(tree, shuffled);
        CAPTURE(n);
        for (std::size_t i = 0; i < a.values.size(); ++i)
            CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-9);
    }
}

TEST_CASE("refitting on identical input reproduces the tree bit for bit") {
    Rng rng(85);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 4; ++i) clouds.push_back(random_cloud(64, rng));

    FeatureTree a = fit_tree(clouds, toy_config());
    FeatureTree b = fit_tree(clouds, toy_config());

    ModelContainer ma, mb;
    ma.tree = a;
    mb.tree = b;
    ma.class_names = mb.class_names = {"x", "y"};
    CHECK(serialize_model(ma) == serialize_model(mb));
}

TEST_CASE("transform on an unfitted tree is rejected") {
    FeatureTree tree;
    tree.config = toy_config();
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(transform(tree, c), Error);
    try {
        transform(tree, c);
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_state);
    }
}

TEST_CASE("dropping sub-threshold leaves shrinks the feature vector") {
    Rng rng(95);
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 4; ++i) clouds.push_back(random_cloud(64, rng));

    TreeConfig keep = toy_config();
    TreeConfig drop = toy_config();
    drop.drop_below_threshold = true;
    FeatureTree full = fit_tree(clouds, keep);
    FeatureTree trimmed = fit_tree(clouds, drop);

    CHECK(trimmed.leaf_count() < full.leaf_count());
    CHECK(trimmed.nodes.size() == full.nodes.size());
    for (std::uint32_t id : trimmed.leaf_order)
        CHECK(trimmed.nodes[id].energy >= drop.energy_threshold);

    PointCloud c = random_cloud(64, rng);
    GlobalFeature f = transform(trimmed, c);
    CHECK(f.values.size() == trimmed.feature_dim());

    // Kept leaves carry the same values as in the full tree.
    GlobalFeature g = transform(full, c);
    std::size_t aggs = keep.aggregations.size();
    std::vector<std::int32_t> full_pos(full.nodes.size(), -1);
    for (std::size_t i = 0; i < full.leaf_order.size(); ++i)
        full_pos[full.leaf_order[i]] = static_cast<std::int32_t>(i);
    for (std::size_t i = 0; i < trimmed.leaf_order.size(); ++i) {
        std::int32_t fp = full_pos[trimmed.leaf_order[i]];
        REQUIRE(fp >= 0);
        for (std::size_t a = 0; a < aggs; ++a)
            CHECK(f.values[i * aggs + a] ==
                  doctest::Approx(g.values[static_cast<std::size_t>(fp) * aggs + a])
                      .epsilon(1e-12));
    }
}

TEST_CASE("features of a subsampled shape stay close to the full shape") {
    std::vector<PointCloud> train;
    for (int label = 0; label < 4; ++label)
        for (int i = 0; i < 3; ++i)
            train.push_back(synthetic_cloud(label, 128, 0.01, 77, static_cast<std::uint64_t>(i)));

    TreeConfig cfg;
    cfg.num_hops = 2;
    cfg.k_per_hop = {16, 8};
    cfg.points_per_hop = {128, 64};
    cfg.energy_threshold = 0.01;
    FeatureTree tree = fit_tree(train, cfg);

    for (int label = 0; label < 4; ++label) {
        PointCloud full = synthetic_cloud(label, 512, 0.01, 99, 0);
        PointCloud sparse = subsample(full, 128, 123);

        GlobalFeature a = transform(tree, full);
        GlobalFeature b = transform(tree, sparse);
        Eigen::Map<Eigen::VectorXd> va(a.values.data(), static_cast<Eigen::Index>(a.values.size()));
        Eigen::Map<Eigen::VectorXd> vb(b.values.data(), static_cast<Eigen::Index>(b.values.size()));
        double cosine = va.dot(vb) / (va.norm() * vb.norm());
        CAPTURE(label);
        CHECK(cosine > 0.9);
    }
}

TEST_SUITE_END();
