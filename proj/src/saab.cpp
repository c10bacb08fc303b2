#include "ph2/saab.hpp"

#include <cmath>

#include "ph2/error.hpp"

namespace ph2 {

namespace {

// Fix each eigenvector's sign so its largest-magnitude entry is positive;
// on magnitude ties the earliest entry decides.
void fix_sign(Eigen::VectorXd& v) {
    int best = 0;
    double best_abs = std::abs(v[0]);
    for (int i = 1; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (v[best] < 0.0) v = -v;
}

// Orthonormal basis of the subspace orthogonal to the DC direction: columns
// 2..d of the Householder reflection mapping e1 onto dc.
Eigen::MatrixXd dc_complement_basis(int d) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, -inv_sqrt_d);
    v[0] += 1.0; // v = e1 - dc
    const double scale = 2.0 / v.squaredNorm();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d) - scale * (v * v.transpose());
    return h.rightCols(d - 1);
}

} // namespace

SaabAccumulator::SaabAccumulator(int dim) : dim_(dim) {
    if (dim < 2) throw_invalid_input("saab: input dimension must be >= 2");
    sum_ = Eigen::VectorXd::Zero(dim);
    sum_outer_ = Eigen::MatrixXd::Zero(dim, dim);
}

void SaabAccumulator::accumulate(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    if (rows.cols() != dim_) throw_invalid_input("saab: sample width does not match accumulator");
    if (!rows.allFinite()) throw_invalid_input("saab: non-finite sample entry");
    sum_ += rows.colwise().sum().transpose();
    sum_outer_ += rows.transpose() * rows;
    count_ += rows.rows();
}

void SaabAccumulator::merge(const SaabAccumulator& other) {
    if (other.dim_ != dim_) throw_invalid_input("saab: accumulator dimension mismatch");
    sum_ += other.sum_;
    sum_outer_ += other.sum_outer_;
    count_ += other.count_;
}

SaabFilterBank SaabAccumulator::finalize() const {
    if (count_ < 2) throw_insufficient_data("saab: need at least 2 samples");
    const int d = dim_;
    const double inv_n = 1.0 / static_cast<double>(count_);

    Eigen::VectorXd mean = sum_ * inv_n;
    Eigen::MatrixXd cov = sum_outer_ * inv_n - mean * mean.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();

    SaabFilterBank bank;
    bank.input_dim = d;
    bank.mean = std::move(mean);
    bank.eigenvalues = Eigen::VectorXd::Zero(d);

    const Eigen::VectorXd dc = bank.dc_weight();
    bank.eigenvalues[0] = std::max(0.0, dc.dot(cov * dc));

    // Residual spectrum from the covariance restricted to the DC complement.
    // Solving in the (d-1)-dimensional subspace keeps the AC rows exactly
    // orthogonal to the DC filter even when the spectrum is degenerate.
    const Eigen::MatrixXd basis = dc_complement_basis(d);
    Eigen::MatrixXd reduced = basis.transpose() * cov * basis;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reduced);
    if (solver.info() != Eigen::Success) throw_invalid_state("saab: eigendecomposition failed");

    // Eigen reports ascending order; we store descending.
    bank.ac_weights.resize(d - 1, d);
    for (int i = 0; i < d - 1; ++i) {
        const int src = d - 2 - i;
        bank.eigenvalues[1 + i] = std::max(0.0, solver.eigenvalues()[src]);
        Eigen::VectorXd w = basis * solver.eigenvectors().col(src);
        fix_sign(w);
        bank.ac_weights.row(i) = w.transpose();
    }
    return bank;
}

SaabFilterBank fit_saab(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
    if (samples.rows() < 2) throw_insufficient_data("fit_saab: need at least 2 samples");
    SaabAccumulator acc(static_cast<int>(samples.cols()));
    acc.accumulate(samples);
    return acc.finalize();
}

CoefficientMatrix apply_saab(const SaabFilterBank& bank,
                             const Eigen::Ref<const Eigen::MatrixXd>& samples) {
    if (samples.cols() != bank.input_dim) throw_invalid_input("apply_saab: sample width mismatch");
    const Eigen::VectorXd dc = bank.dc_weight();

    Eigen::MatrixXd centered = samples.rowwise() - bank.mean.transpose();
    Eigen::VectorXd dc_coeffs = centered * dc;
    centered.noalias() -= dc_coeffs * dc.transpose();

    CoefficientMatrix coeffs(samples.rows(), bank.input_dim);
    coeffs.col(0) = dc_coeffs;
    coeffs.rightCols(bank.input_dim - 1).noalias() = centered * bank.ac_weights.transpose();
    return coeffs;
}

Eigen::VectorXd channel_energies(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                 double parent_energy) {
    if (parent_energy < 0.0) throw_invalid_input("channel_energies: negative parent energy");
    const double total = eigenvalues.sum();
    if (total <= 0.0) return Eigen::VectorXd::Zero(eigenvalues.size());
    return eigenvalues * (parent_energy / total);
}

Eigen::VectorXd channel_energies(const SaabFilterBank& bank, double parent_energy) {
    return channel_energies(bank.eigenvalues, parent_energy);
}

Eigen::MatrixXd cross_correlation(const Eigen::Ref<const Eigen::MatrixXd>& coeffs) {
    if (coeffs.rows() < 2) throw_invalid_input("cross_correlation: need at least 2 samples");
    return (coeffs.transpose() * coeffs) / static_cast<double>(coeffs.rows());
}

} // namespace ph2
