#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ph2 {

// Result of clustering one feature column into intervals. Interval labels
// are contiguous in [0, intervals) and sorted by ascending centroid, so
// label order follows value order.
struct IntervalPartition {
    std::vector<std::uint32_t> assignment; // one interval per sample
    std::vector<double> centroids;         // ascending
    int intervals = 0;                     // may be less than requested
};

// Lloyd's algorithm on scalar values. Initialization takes the quantile
// midpoints of the distinct values, which makes the result deterministic and
// invariant under positive affine maps of the column. Requests for more
// intervals than there are distinct values are reduced with a warning.
IntervalPartition partition_1d(const Eigen::Ref<const Eigen::VectorXd>& values, int intervals,
                               int max_iters = 100);

// Mean negative log-likelihood of the per-interval class histograms, i.e.
// how impure the intervals are. 0 means every interval is class-pure; lower
// is more discriminant. With majority_vote the score instead treats each
// interval's majority class as a binary predictor and scores its hit/miss
// probabilities, the alternative reading of the voting formulation.
double cross_entropy_score(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const std::vector<int>& labels, int num_classes, int intervals,
                           bool majority_vote = false);

enum class RankMode { cross_entropy, energy };

const char* rank_mode_name(RankMode m);
RankMode rank_mode_from_name(const std::string& name);

struct RankedFeatureSet {
    Eigen::VectorXd cross_entropy;          // per column
    Eigen::VectorXd energy;                 // per column
    std::vector<std::uint32_t> order_ce;    // columns by ascending score, ties by index
    std::vector<std::uint32_t> order_energy; // columns by descending energy, ties by index
};

// Score every column of a feature matrix. column_energy carries each
// column's leaf energy and must match the column count.
RankedFeatureSet rank_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                               const std::vector<int>& labels, int num_classes, int intervals,
                               const Eigen::Ref<const Eigen::VectorXd>& column_energy,
                               bool majority_vote = false);

// First m columns of the chosen ordering.
std::vector<std::uint32_t> select_top(const RankedFeatureSet& ranked, RankMode mode,
                                      std::size_t m);

// Recompute both orderings from the stored scores (ascending score and
// descending energy, ties to the lower column index). Deserialization uses
// this so orderings never need to be persisted.
void rebuild_orders(RankedFeatureSet& ranked);

} // namespace ph2
