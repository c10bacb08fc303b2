#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ph2/point_cloud.hpp"
#include "ph2/saab.hpp"

namespace ph2 {

// Per-leaf reductions from per-point channel values to one scalar. The
// averaged forms keep feature scale independent of the point count, which is
// what makes features comparable across sampling densities.
enum class Aggregation : std::uint8_t { mean = 0, max = 1, l1 = 2, l2 = 3 };

const char* aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

struct TreeConfig {
    int num_hops = 4;
    std::vector<int> k_per_hop{32, 16, 16, 16};
    std::vector<int> points_per_hop{1024, 768, 512, 384};
    double energy_threshold = 1e-4;
    std::vector<Aggregation> aggregations{Aggregation::mean, Aggregation::max};
    bool normalize_input = true;
    bool drop_below_threshold = false;

    // Throws ConfigError on violated invariants (lengths, monotonicity,
    // threshold range, duplicate or out-of-order aggregations).
    void validate() const;
};

// One channel of a fitted bank. Internal nodes own the bank their children
// are computed with; leaves own nothing.
struct TreeNode {
    std::uint32_t node_id = 0;
    std::int32_t parent_id = -1; // -1: child of the root bank
    std::uint16_t hop_index = 0;
    std::uint16_t channel_index = 0;
    double energy = 0.0;
    bool is_internal = false;
    std::int32_t bank_index = -1; // into FeatureTree::banks, -1 for leaves
};

struct FeatureTree {
    TreeConfig config;
    SaabFilterBank root_bank;          // consumes the 8*3-dim hop-0 rows
    std::vector<TreeNode> nodes;       // stored in pre-order
    std::vector<SaabFilterBank> banks; // banks of internal nodes
    std::vector<std::uint32_t> leaf_order;
    bool fitted = false;

    std::size_t leaf_count() const { return leaf_order.size(); }
    std::size_t feature_dim() const { return leaf_order.size() * config.aggregations.size(); }
    double leaf_energy_sum() const;
    // Number of stored filter doubles (means, AC rows, eigenvalues).
    std::size_t filter_float_count() const;
    // Recompute leaf_order from the node table (pre-order, honoring the
    // drop-below-threshold setting). Used after deserialization.
    void rebuild_leaf_order();
};

struct FeatureProvenance {
    std::uint32_t leaf_node_id = 0;
    Aggregation aggregation = Aggregation::mean;
};

struct GlobalFeature {
    std::vector<double> values;
    std::vector<FeatureProvenance> provenance;
};

// Octant mean-pooled attribute rows: one row per center, 8 * D columns where
// D is the attribute width. Neighbors come from exact kNN over `points`.
Eigen::MatrixXd build_attributes(std::span<const Vec3> points,
                                 std::span<const std::uint32_t> centers, std::size_t k,
                                 const Eigen::Ref<const Eigen::MatrixXd>& point_attrs);

// Unsupervised fit of the whole cascade over a training set.
FeatureTree fit_tree(std::span<const PointCloud> clouds, const TreeConfig& config);

// Replay the cascade on one cloud and collect the per-leaf aggregates.
GlobalFeature transform(const FeatureTree& tree, const PointCloud& cloud);

// Feature slot descriptions in the exact order transform emits values.
std::vector<FeatureProvenance> feature_layout(const FeatureTree& tree);

// Hop-0 attribute rows of one cloud under a config (normalization, FPS and
// kNN included; targets clamp to the cloud size). Feeding these through the
// root bank reproduces the tree's first-stage coefficients.
Eigen::MatrixXd hop0_attributes(const TreeConfig& config, const PointCloud& cloud);

} // namespace ph2
