#include "ph2/classifier.hpp"

#include <cmath>
#include <numbers>

#include "ph2/error.hpp"
#include "ph2/log.hpp"

namespace ph2 {

namespace {

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
    if (!m.allFinite()) throw_invalid_input(std::string(what) + ": non-finite entries");
}

Eigen::MatrixXd standardized(const LLSRModel& model,
                             const Eigen::Ref<const Eigen::MatrixXd>& features) {
    if (!model.standardize) return features;
    return (features.rowwise() - model.feature_mean.transpose()).array().rowwise() /
           model.feature_std.transpose().array();
}

} // namespace

LLSRModel fit_llsr(const Eigen::Ref<const Eigen::MatrixXd>& features,
                   const std::vector<int>& labels, int num_classes, double ridge,
                   bool standardize) {
    const Eigen::Index S = features.rows();
    const Eigen::Index F = features.cols();
    if (S < 1 || F < 1) throw_invalid_input("fit_llsr: empty feature matrix");
    if (labels.size() != static_cast<std::size_t>(S))
        throw_invalid_input("fit_llsr: one label per sample required");
    if (num_classes < 2) throw_invalid_input("fit_llsr: at least 2 classes required");
    if (!(ridge >= 0.0)) throw_invalid_input("fit_llsr: ridge must be nonnegative");
    check_finite(features, "fit_llsr");

    std::vector<std::int64_t> class_count(static_cast<std::size_t>(num_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw_invalid_input("fit_llsr: label outside [0, classes)");
        class_count[static_cast<std::size_t>(y)] += 1;
    }
    int present = 0;
    for (std::int64_t c : class_count) present += c > 0 ? 1 : 0;
    if (present < 2) log::warn("fit_llsr: training labels cover a single class");
    if (S < F + 1)
        log::warn("fit_llsr: %lld samples for %lld features, relying on the ridge term",
                  static_cast<long long>(S), static_cast<long long>(F));

    LLSRModel model;
    model.feature_dim = static_cast<int>(F);
    model.num_classes = num_classes;
    model.standardize = standardize;
    model.feature_mean = features.colwise().mean();
    if (standardize) {
        Eigen::VectorXd var =
            (features.rowwise() - model.feature_mean.transpose()).array().square().colwise().mean();
        model.feature_std = var.array().sqrt();
        for (Eigen::Index j = 0; j < F; ++j)
            if (!(model.feature_std[j] > 0.0)) model.feature_std[j] = 1.0;
    } else {
        model.feature_mean.setZero();
        model.feature_std = Eigen::VectorXd::Ones(F);
    }

    Eigen::MatrixXd X(S, F + 1);
    X.leftCols(F) = standardized(model, features);
    X.col(F).setOnes();

    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(S, num_classes);
    for (Eigen::Index i = 0; i < S; ++i) Y(i, labels[static_cast<std::size_t>(i)]) = 1.0;

    if (S < F + 1) {
        // Dual form of the same ridge problem: (X'X+rI)^-1 X' = X'(XX'+rI)^-1,
        // so wide feature matrices solve an S x S system instead of (F+1)^2.
        Eigen::MatrixXd K = X * X.transpose();
        K.diagonal().array() += ridge;
        model.weights = X.transpose() * K.ldlt().solve(Y);
    } else {
        Eigen::MatrixXd G = X.transpose() * X;
        G.diagonal().array() += ridge;
        model.weights = G.ldlt().solve(X.transpose() * Y);
    }
    if (!model.weights.allFinite()) throw_invalid_state("fit_llsr: solve produced non-finite weights");
    return model;
}

Eigen::MatrixXd predict_scores(const LLSRModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& features) {
    if (features.cols() != model.feature_dim)
        throw_invalid_input("predict_scores: feature dimension mismatch");
    check_finite(features, "predict_scores");
    Eigen::MatrixXd Z = standardized(model, features);
    return (Z * model.weights.topRows(model.feature_dim)).rowwise() +
           model.weights.row(model.feature_dim);
}

std::vector<int> argmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

std::vector<int> predict(const LLSRModel& model,
                         const Eigen::Ref<const Eigen::MatrixXd>& features) {
    return argmax_rows(predict_scores(model, features));
}

std::vector<double> ensemble_angles(int rotations) {
    if (rotations < 1) throw_invalid_input("ensemble_angles: rotation count must be positive");
    std::vector<double> angles(static_cast<std::size_t>(rotations));
    for (int i = 0; i < rotations; ++i)
        angles[static_cast<std::size_t>(i)] =
            2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(rotations);
    return angles;
}

Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& labels,
                 int num_classes) {
    if (predictions.size() != labels.size())
        throw_invalid_input("evaluate: predictions/labels length mismatch");
    if (num_classes < 1) throw_invalid_input("evaluate: class count must be positive");

    Metrics m;
    m.confusion.setZero(num_classes, num_classes);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i];
        const int p = predictions[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw_invalid_input("evaluate: class index out of range");
        m.confusion(t, p) += 1;
        correct += t == p ? 1 : 0;
    }
    const auto total = static_cast<std::int64_t>(labels.size());
    m.overall_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;

    double recall_sum = 0.0;
    int populated = 0;
    for (int t = 0; t < num_classes; ++t) {
        const std::int64_t row = m.confusion.row(t).sum();
        if (row == 0) continue;
        recall_sum += static_cast<double>(m.confusion(t, t)) / static_cast<double>(row);
        populated += 1;
    }
    m.class_avg_accuracy = populated > 0 ? recall_sum / populated : 0.0;
    return m;
}

} // namespace ph2
