#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ph2/geometry.hpp"

namespace ph2 {

// Linear least squares onto one-hot class targets. Features are
// standardized per column first (zero-variance columns pass through), then
// augmented with a constant-1 column whose weight row is the bias.
struct LLSRModel {
    int feature_dim = 0;
    int num_classes = 0;
    bool standardize = true;
    Eigen::VectorXd feature_mean; // size F
    Eigen::VectorXd feature_std;  // size F, entries > 0
    Eigen::MatrixXd weights;      // (F+1) x M, last row is the bias
};

// Ridge weight on the normal equations. Plain least squares can be singular
// once selected feature counts approach the sample count; this keeps the
// solve deterministic without visibly biasing the fit.
inline constexpr double kDefaultRidge = 1e-6;

LLSRModel fit_llsr(const Eigen::Ref<const Eigen::MatrixXd>& features,
                   const std::vector<int>& labels, int num_classes,
                   double ridge = kDefaultRidge, bool standardize = true);

// Raw regression outputs; one row per sample, one column per class. These
// are scores, not probabilities: only their argmax (and the second-stage
// ensemble regression) consume them.
Eigen::MatrixXd predict_scores(const LLSRModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& features);

// Argmax per row, ties to the lowest class index.
std::vector<int> predict(const LLSRModel& model,
                         const Eigen::Ref<const Eigen::MatrixXd>& features);
std::vector<int> argmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& scores);

// Rotation ensemble: one stage-1 model per rotated copy of the input, one
// stage-2 model over the concatenated stage-1 score vectors.
struct EnsembleModel {
    Axis axis = Axis::z;
    std::vector<double> angles; // radians, angle i = i * 2pi / count
    std::vector<LLSRModel> stage1;
    LLSRModel stage2;
};

std::vector<double> ensemble_angles(int rotations);

struct Metrics {
    double overall_accuracy = 0.0;
    double class_avg_accuracy = 0.0;
    // confusion(t, p) = samples of true class t predicted as p
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> confusion;
};

Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& labels,
                 int num_classes);

} // namespace ph2
