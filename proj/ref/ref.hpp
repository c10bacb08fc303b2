#pragma once

// Serial reference implementations, kept deliberately naive and free of
// Eigen and OpenMP. The test suites check the production kernels against
// these, and the benchmark uses them as the single-thread baseline.

#include <cstdint>
#include <span>
#include <vector>

#include "ph2/point_cloud.hpp"

namespace ph2::ref {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Greedy farthest point sampling from the full pairwise distance matrix.
std::vector<std::uint32_t> fps_bruteforce(std::span<const Vec3> points, std::size_t m);

// k nearest indices by sorting every distance, ties to the smaller index.
std::vector<std::uint32_t> knn_linear(std::span<const Vec3> points, std::uint32_t center,
                                      std::size_t k);

int octant_bruteforce(const Vec3& center, const Vec3& p);

// Octant mean-pooled attribute rows, recomputed from scratch per center.
Matrix attributes_naive(std::span<const Vec3> points, const Matrix& point_attrs,
                        std::span<const std::uint32_t> centers, std::size_t k);

// Column means of a sample matrix.
std::vector<double> column_means(const Matrix& samples);

// Covariance (1/N normalization) of explicitly formed residual rows:
// samples minus column mean minus per-row DC component.
Matrix residual_covariance(const Matrix& samples);

// Variance of the DC projections of mean-removed rows.
double dc_variance(const Matrix& samples);

// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
// descending order; eigenvectors[i] is the row vector paired with value i,
// sign-fixed so the largest-magnitude entry is positive.
void jacobi_eigh(const Matrix& sym, std::vector<double>& values, Matrix& vectors);

// Ridge-regularized normal equations (G + ridge*I) W = X^T Y solved by
// Gaussian elimination with partial pivoting. X is S x P, Y is S x M,
// the result is P x M.
Matrix solve_normal_equations(const Matrix& x, const Matrix& y, double ridge);

// Per-sample cross entropy of a 1D interval assignment against labels.
double cross_entropy_naive(std::span<const int> assignment, std::span<const int> labels,
                           int num_intervals, int num_classes);

struct NaiveMetrics {
    double overall = 0.0;
    double class_avg = 0.0;
    std::vector<std::vector<std::int64_t>> confusion;
};

NaiveMetrics metrics_naive(std::span<const int> predictions, std::span<const int> labels,
                           int num_classes);

} // namespace ph2::ref
