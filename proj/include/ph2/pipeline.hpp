#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ph2/classifier.hpp"
#include "ph2/dataset_io.hpp"
#include "ph2/feature_tree.hpp"
#include "ph2/model_io.hpp"
#include "ph2/run_config.hpp"

namespace ph2 {

// One feature row per cloud, in cloud order.
Eigen::MatrixXd extract_features(const FeatureTree& tree, std::span<const PointCloud> clouds);
Eigen::MatrixXd extract_features_rotated(const FeatureTree& tree,
                                         std::span<const PointCloud> clouds, Axis axis,
                                         double angle);

// Energy of the leaf behind each feature column (repeated per aggregation),
// aligned with feature_layout.
Eigen::VectorXd column_energies(const FeatureTree& tree);

Eigen::MatrixXd select_columns(const Eigen::Ref<const Eigen::MatrixXd>& features,
                               const std::vector<std::uint32_t>& columns);

// Deterministic shuffled split of [0, n) for threshold/feature sweeps.
// val_fraction 0 leaves the validation side empty.
void train_val_split(std::size_t n, double val_fraction, std::uint64_t seed,
                     std::vector<std::uint32_t>& train_idx, std::vector<std::uint32_t>& val_idx);

// Rotation ensemble over a shared tree: stage-1 model per angle, stage-2
// model on the concatenated stage-1 scores. `selected` restricts features to
// those columns first (empty = keep all).
EnsembleModel fit_ensemble(const FeatureTree& tree, std::span<const PointCloud> clouds,
                           const std::vector<int>& labels, int num_classes,
                           const std::vector<std::uint32_t>& selected, Axis axis, int rotations,
                           double ridge, bool standardize);
Eigen::MatrixXd predict_ensemble_scores(const FeatureTree& tree, const EnsembleModel& model,
                                        std::span<const PointCloud> clouds,
                                        const std::vector<std::uint32_t>& selected);

// Full training flow driven by a RunConfig: tree, optional ranking,
// classifier (single LLSR or ensemble).
ModelContainer fit_pipeline(const Dataset& train, const RunConfig& cfg);

// Classify clouds with whatever classifier the container holds.
std::vector<int> predict_with_model(const ModelContainer& container,
                                    std::span<const PointCloud> clouds);

Metrics evaluate_model(const ModelContainer& container, const Dataset& data);

} // namespace ph2
