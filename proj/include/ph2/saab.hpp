#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ph2 {

// One fitted transform: a constant DC filter plus the principal axes of the
// DC-removed residuals. eigenvalues[0] is the variance of DC projections;
// eigenvalues[1..d-1] are the residual covariance eigenvalues in descending
// order, matching ac_weights rows.
struct SaabFilterBank {
    int input_dim = 0;            // d
    Eigen::VectorXd mean;         // column mean of the training samples
    Eigen::MatrixXd ac_weights;   // (d-1) x d, orthonormal rows, each orthogonal to dc
    Eigen::VectorXd eigenvalues;  // d entries, all >= 0

    // The DC filter is the constant unit vector (1/sqrt(d), ..., 1/sqrt(d)).
    Eigen::VectorXd dc_weight() const {
        return Eigen::VectorXd::Constant(input_dim, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    }
};

// Rows are per-sample coefficient vectors ordered [DC, AC1, ..., AC(d-1)].
using CoefficientMatrix = Eigen::MatrixXd;

// Mergeable second-moment accumulator. Row order within one accumulate call
// and the merge order across accumulators are both up to the caller; keeping
// them fixed keeps fitted banks bit-identical across thread counts.
class SaabAccumulator {
public:
    explicit SaabAccumulator(int dim);

    void accumulate(const Eigen::Ref<const Eigen::MatrixXd>& rows);
    void merge(const SaabAccumulator& other);

    std::int64_t count() const { return count_; }
    int dim() const { return dim_; }

    SaabFilterBank finalize() const;

private:
    int dim_;
    std::int64_t count_ = 0;
    Eigen::VectorXd sum_;         // column sums
    Eigen::MatrixXd sum_outer_;   // sum of row outer products
};

// Fit a bank on an explicit sample matrix (N x d, one sample per row).
SaabFilterBank fit_saab(const Eigen::Ref<const Eigen::MatrixXd>& samples);

// Project samples onto [DC, AC...] after removing the training mean and the
// per-sample DC component.
CoefficientMatrix apply_saab(const SaabFilterBank& bank,
                             const Eigen::Ref<const Eigen::MatrixXd>& samples);

// Split a parent's energy across channels proportionally to the eigenvalues.
// All-zero eigenvalues yield all-zero energies.
Eigen::VectorXd channel_energies(const SaabFilterBank& bank, double parent_energy);
Eigen::VectorXd channel_energies(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                 double parent_energy);

// (1/N) * B^T B over the sample dimension.
Eigen::MatrixXd cross_correlation(const Eigen::Ref<const Eigen::MatrixXd>& coeffs);

} // namespace ph2
