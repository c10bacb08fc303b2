#include "ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ph2::ref {

std::vector<std::uint32_t> fps_bruteforce(std::span<const Vec3> points, std::size_t m) {
    const std::size_t n = points.size();
    if (m < 1 || m > n) throw std::invalid_argument("fps_bruteforce: m out of range");

    std::vector<double> dist(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = squared_dist(points[i], points[j]);

    Vec3 centroid{0, 0, 0};
    for (const Vec3& p : points) {
        centroid[0] += p[0];
        centroid[1] += p[1];
        centroid[2] += p[2];
    }
    centroid[0] /= static_cast<double>(n);
    centroid[1] /= static_cast<double>(n);
    centroid[2] /= static_cast<double>(n);

    auto better = [&](std::size_t a, double da, std::size_t b, double db) {
        if (da != db) return da > db;
        if (points[a] != points[b]) return lex_less(points[a], points[b]);
        return a < b;
    };

    std::vector<std::uint32_t> selected;
    std::vector<bool> taken(n, false);
    for (std::size_t round = 0; round < m; ++round) {
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            double d;
            if (round == 0) {
                d = squared_dist(points[i], centroid);
            } else {
                d = std::numeric_limits<double>::infinity();
                for (std::uint32_t s : selected) d = std::min(d, dist[i * n + s]);
            }
            if (best == n || better(i, d, best, best_d)) {
                best = i;
                best_d = d;
            }
        }
        taken[best] = true;
        selected.push_back(static_cast<std::uint32_t>(best));
    }
    return selected;
}

std::vector<std::uint32_t> knn_linear(std::span<const Vec3> points, std::uint32_t center,
                                      std::size_t k) {
    const std::size_t n = points.size();
    if (k < 1 || k > n) throw std::invalid_argument("knn_linear: k out of range");
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = squared_dist(points[a], points[center]);
        const double db = squared_dist(points[b], points[center]);
        if (da != db) return da < db;
        return a < b;
    });
    order.resize(k);
    return order;
}

int octant_bruteforce(const Vec3& center, const Vec3& p) {
    int g = 0;
    if (p[0] - center[0] >= 0.0) g += 4;
    if (p[1] - center[1] >= 0.0) g += 2;
    if (p[2] - center[2] >= 0.0) g += 1;
    return g;
}

Matrix attributes_naive(std::span<const Vec3> points, const Matrix& point_attrs,
                        std::span<const std::uint32_t> centers, std::size_t k) {
    if (point_attrs.rows != points.size())
        throw std::invalid_argument("attributes_naive: attribute row count mismatch");
    const std::size_t d = point_attrs.cols;
    Matrix out(centers.size(), 8 * d);
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        const std::uint32_t c = centers[ci];
        const auto nbrs = knn_linear(points, c, k);
        std::vector<double> sums(8 * d, 0.0);
        std::vector<int> counts(8, 0);
        for (std::uint32_t idx : nbrs) {
            if (idx == c) continue;
            const int g = octant_bruteforce(points[c], points[idx]);
            counts[g] += 1;
            for (std::size_t a = 0; a < d; ++a) sums[g * d + a] += point_attrs.at(idx, a);
        }
        for (int g = 0; g < 8; ++g) {
            if (counts[g] == 0) continue;
            for (std::size_t a = 0; a < d; ++a)
                out.at(ci, g * d + a) = sums[g * d + a] / counts[g];
        }
    }
    return out;
}

std::vector<double> column_means(const Matrix& samples) {
    std::vector<double> mean(samples.cols, 0.0);
    for (std::size_t r = 0; r < samples.rows; ++r)
        for (std::size_t c = 0; c < samples.cols; ++c) mean[c] += samples.at(r, c);
    for (double& v : mean) v /= static_cast<double>(samples.rows);
    return mean;
}

double dc_variance(const Matrix& samples) {
    const auto mean = column_means(samples);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(samples.cols));
    double acc = 0.0;
    for (std::size_t r = 0; r < samples.rows; ++r) {
        double dc = 0.0;
        for (std::size_t c = 0; c < samples.cols; ++c)
            dc += (samples.at(r, c) - mean[c]) * inv_sqrt_d;
        acc += dc * dc;
    }
    return acc / static_cast<double>(samples.rows);
}

Matrix residual_covariance(const Matrix& samples) {
    const std::size_t n = samples.rows;
    const std::size_t d = samples.cols;
    const auto mean = column_means(samples);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Matrix residual(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        double dc = 0.0;
        for (std::size_t c = 0; c < d; ++c) dc += (samples.at(r, c) - mean[c]) * inv_sqrt_d;
        for (std::size_t c = 0; c < d; ++c)
            residual.at(r, c) = samples.at(r, c) - mean[c] - dc * inv_sqrt_d;
    }

    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov.at(i, j) += residual.at(r, i) * residual.at(r, j);
    for (double& v : cov.data) v /= static_cast<double>(n);
    return cov;
}

void jacobi_eigh(const Matrix& sym, std::vector<double>& values, Matrix& vectors) {
    const std::size_t n = sym.rows;
    Matrix a = sym;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.at(i, i)));
    scale = std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (std::sqrt(off) < 1e-15 * scale * static_cast<double>(n)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p);
                    const double aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i);
                    const double aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p);
                    const double viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a.at(x, x) > a.at(y, y); });

    values.resize(n);
    vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = a.at(order[i], order[i]);
        std::size_t best = 0;
        double best_abs = -1.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double mag = std::abs(v.at(r, order[i]));
            if (mag > best_abs) {
                best_abs = mag;
                best = r;
            }
        }
        const double flip = v.at(best, order[i]) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) vectors.at(i, r) = flip * v.at(r, order[i]);
    }
}

Matrix solve_normal_equations(const Matrix& x, const Matrix& y, double ridge) {
    const std::size_t s = x.rows;
    const std::size_t p = x.cols;
    const std::size_t m = y.cols;
    if (y.rows != s) throw std::invalid_argument("solve_normal_equations: row mismatch");

    Matrix g(p, p);
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) g.at(i, j) += x.at(r, i) * x.at(r, j);
    for (std::size_t i = 0; i < p; ++i) g.at(i, i) += ridge;

    Matrix rhs(p, m);
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < m; ++j) rhs.at(i, j) += x.at(r, i) * y.at(r, j);

    // Gaussian elimination with partial pivoting on [g | rhs].
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(g.at(r, col)) > std::abs(g.at(pivot, col))) pivot = r;
        if (pivot != col) {
            for (std::size_t c = 0; c < p; ++c) std::swap(g.at(col, c), g.at(pivot, c));
            for (std::size_t c = 0; c < m; ++c) std::swap(rhs.at(col, c), rhs.at(pivot, c));
        }
        const double diag = g.at(col, col);
        if (diag == 0.0) throw std::runtime_error("solve_normal_equations: singular system");
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = g.at(r, col) / diag;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < p; ++c) g.at(r, c) -= f * g.at(col, c);
            for (std::size_t c = 0; c < m; ++c) rhs.at(r, c) -= f * rhs.at(col, c);
        }
    }
    Matrix w(p, m);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < m; ++j) w.at(i, j) = rhs.at(i, j) / g.at(i, i);
    return w;
}

double cross_entropy_naive(std::span<const int> assignment, std::span<const int> labels,
                           int num_intervals, int num_classes) {
    if (assignment.size() != labels.size() || assignment.empty())
        throw std::invalid_argument("cross_entropy_naive: bad sizes");
    std::vector<std::vector<std::int64_t>> hist(num_intervals,
                                                std::vector<std::int64_t>(num_classes, 0));
    std::vector<std::int64_t> totals(num_intervals, 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        hist[assignment[i]][labels[i]] += 1;
        totals[assignment[i]] += 1;
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const double prob = static_cast<double>(hist[assignment[i]][labels[i]]) /
                            static_cast<double>(totals[assignment[i]]);
        loss += -std::log(std::min(1.0, prob + 1e-12));
    }
    return loss / static_cast<double>(assignment.size());
}

NaiveMetrics metrics_naive(std::span<const int> predictions, std::span<const int> labels,
                           int num_classes) {
    NaiveMetrics out;
    out.confusion.assign(num_classes, std::vector<std::int64_t>(num_classes, 0));
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out.confusion[labels[i]][predictions[i]] += 1;
        if (labels[i] == predictions[i]) ++correct;
    }
    out.overall = predictions.empty()
                      ? 0.0
                      : static_cast<double>(correct) / static_cast<double>(predictions.size());
    double recall_sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        std::int64_t row = 0;
        for (int p = 0; p < num_classes; ++p) row += out.confusion[c][p];
        if (row == 0) continue;
        ++present;
        recall_sum += static_cast<double>(out.confusion[c][c]) / static_cast<double>(row);
    }
    out.class_avg = present == 0 ? 0.0 : recall_sum / present;
    return out;
}

} // namespace ph2::ref
