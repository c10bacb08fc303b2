#include "ph2/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ph2/error.hpp"
#include "ph2/log.hpp"

namespace ph2 {

namespace {

constexpr double kLogEps = 1e-12;

// log of a probability estimate, floored so empirically impossible events
// stay finite and clamped so exact certainty scores exactly zero.
double safe_log(double p) { return std::log(std::min(1.0, p + kLogEps)); }

} // namespace

IntervalPartition partition_1d(const Eigen::Ref<const Eigen::VectorXd>& values, int intervals,
                               int max_iters) {
    const Eigen::Index n = values.size();
    if (n == 0) throw_invalid_input("partition_1d: empty column");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(values[i])) throw_invalid_input("partition_1d: non-finite value");
    if (intervals < 2) throw_invalid_input("partition_1d: at least 2 intervals required");
    if (max_iters < 1) throw_invalid_input("partition_1d: max_iters must be positive");

    std::vector<double> distinct(values.data(), values.data() + n);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    int J = intervals;
    if (static_cast<int>(distinct.size()) < J) {
        J = static_cast<int>(distinct.size());
        log::warn("partition_1d: only %d distinct values, reducing %d intervals to %d",
                  static_cast<int>(distinct.size()), intervals, J);
    }

    IntervalPartition out;
    out.intervals = J;
    out.assignment.assign(static_cast<std::size_t>(n), 0);
    if (J == 1) {
        out.centroids = {distinct.front()};
        return out;
    }

    // Quantile midpoints over the distinct values: guaranteed distinct
    // starting centroids, invariant under positive affine maps.
    out.centroids.resize(J);
    for (int j = 0; j < J; ++j) {
        const double q = (j + 0.5) / J;
        auto idx = static_cast<std::size_t>(q * static_cast<double>(distinct.size()));
        if (idx >= distinct.size()) idx = distinct.size() - 1;
        out.centroids[j] = distinct[idx];
    }
    out.centroids.erase(std::unique(out.centroids.begin(), out.centroids.end()),
                        out.centroids.end());
    // Midpoint collisions can still happen on heavily tied data; fall back to
    // evenly spaced distinct values, which always yields J distinct seeds.
    if (static_cast<int>(out.centroids.size()) < J) {
        out.centroids.resize(J);
        for (int j = 0; j < J; ++j) {
            const std::size_t idx = (static_cast<std::size_t>(j) * (distinct.size() - 1)) /
                                    static_cast<std::size_t>(J - 1);
            out.centroids[j] = distinct[idx];
        }
        out.centroids.erase(std::unique(out.centroids.begin(), out.centroids.end()),
                            out.centroids.end());
        J = static_cast<int>(out.centroids.size());
        out.intervals = J;
    }

    // Lloyd iterations. 1D clusters are Voronoi cells between sorted
    // centroids, so assignment is a boundary scan. Equidistant values go to
    // the lower interval; empty intervals keep their centroid.
    std::vector<double> sums(J);
    std::vector<std::int64_t> counts(J);
    for (int it = 0; it < max_iters; ++it) {
        std::sort(out.centroids.begin(), out.centroids.end());
        bool changed = false;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = values[i];
            int best = 0;
            double best_d = std::abs(v - out.centroids[0]);
            for (int j = 1; j < J; ++j) {
                const double d = std::abs(v - out.centroids[j]);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            const auto b = static_cast<std::uint32_t>(best);
            if (out.assignment[static_cast<std::size_t>(i)] != b) {
                out.assignment[static_cast<std::size_t>(i)] = b;
                changed = true;
            }
            sums[best] += v;
            counts[best] += 1;
        }
        for (int j = 0; j < J; ++j)
            if (counts[j] > 0) out.centroids[j] = sums[j] / static_cast<double>(counts[j]);
        if (!changed && it > 0) break;
    }

    // Centroid updates preserve order in 1D, so assignments already follow
    // ascending centroids; a final sort guards the empty-interval edge case.
    std::vector<int> relabel(J);
    std::vector<int> order(J);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.centroids[a] < out.centroids[b]; });
    std::vector<double> sorted_centroids(J);
    for (int r = 0; r < J; ++r) {
        relabel[order[r]] = r;
        sorted_centroids[r] = out.centroids[order[r]];
    }
    out.centroids = std::move(sorted_centroids);
    for (auto& a : out.assignment) a = static_cast<std::uint32_t>(relabel[a]);
    return out;
}

double cross_entropy_score(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const std::vector<int>& labels, int num_classes, int intervals,
                           bool majority_vote) {
    const Eigen::Index n = values.size();
    if (n == 0) throw_invalid_input("cross_entropy_score: empty column");
    if (labels.size() != static_cast<std::size_t>(n))
        throw_invalid_input("cross_entropy_score: labels/values length mismatch");
    if (num_classes < 1) throw_invalid_input("cross_entropy_score: class count must be positive");
    for (int c : labels)
        if (c < 0 || c >= num_classes)
            throw_invalid_input("cross_entropy_score: label outside [0, classes)");

    // Columns with fewer distinct values than intervals are reduced inside
    // partition_1d, so requesting more intervals than samples is harmless.
    const IntervalPartition part = partition_1d(values, intervals);
    const int J = part.intervals;

    // hist[j * num_classes + c] = samples of class c in interval j
    std::vector<std::int64_t> hist(static_cast<std::size_t>(J) * num_classes, 0);
    std::vector<std::int64_t> bin_total(J, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = part.assignment[static_cast<std::size_t>(i)];
        hist[static_cast<std::size_t>(j) * num_classes + labels[static_cast<std::size_t>(i)]] += 1;
        bin_total[j] += 1;
    }

    double total = 0.0;
    if (!majority_vote) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto j = part.assignment[static_cast<std::size_t>(i)];
            const double p =
                static_cast<double>(
                    hist[static_cast<std::size_t>(j) * num_classes + labels[static_cast<std::size_t>(i)]]) /
                static_cast<double>(bin_total[j]);
            total -= safe_log(p);
        }
    } else {
        // Each interval votes for its majority class (ties to the lowest
        // index); samples are scored as binary hit/miss against that vote.
        std::vector<int> majority(J, 0);
        for (int j = 0; j < J; ++j) {
            std::int64_t best = -1;
            for (int c = 0; c < num_classes; ++c) {
                const std::int64_t cnt = hist[static_cast<std::size_t>(j) * num_classes + c];
                if (cnt > best) {
                    best = cnt;
                    majority[j] = c;
                }
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto j = part.assignment[static_cast<std::size_t>(i)];
            const double q =
                static_cast<double>(
                    hist[static_cast<std::size_t>(j) * num_classes + majority[j]]) /
                static_cast<double>(bin_total[j]);
            const bool hit = labels[static_cast<std::size_t>(i)] == majority[j];
            total -= safe_log(hit ? q : 1.0 - q);
        }
    }
    return total / static_cast<double>(n);
}

const char* rank_mode_name(RankMode m) {
    return m == RankMode::cross_entropy ? "cross_entropy" : "energy";
}

RankMode rank_mode_from_name(const std::string& name) {
    if (name == "cross_entropy" || name == "ce") return RankMode::cross_entropy;
    if (name == "energy") return RankMode::energy;
    throw_config_error("unknown rank mode '" + name + "'");
}

RankedFeatureSet rank_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                               const std::vector<int>& labels, int num_classes, int intervals,
                               const Eigen::Ref<const Eigen::VectorXd>& column_energy,
                               bool majority_vote) {
    const Eigen::Index cols = features.cols();
    if (cols == 0) throw_invalid_input("rank_features: no feature columns");
    if (column_energy.size() != cols)
        throw_invalid_input("rank_features: one energy per column required");

    RankedFeatureSet out;
    out.cross_entropy.resize(cols);
    out.energy = column_energy;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index c = 0; c < cols; ++c)
        out.cross_entropy[c] =
            cross_entropy_score(features.col(c), labels, num_classes, intervals, majority_vote);

    rebuild_orders(out);
    return out;
}

void rebuild_orders(RankedFeatureSet& ranked) {
    if (ranked.energy.size() != ranked.cross_entropy.size())
        throw_invalid_input("rebuild_orders: score/energy length mismatch");
    ranked.order_ce.resize(static_cast<std::size_t>(ranked.cross_entropy.size()));
    std::iota(ranked.order_ce.begin(), ranked.order_ce.end(), 0u);
    ranked.order_energy = ranked.order_ce;
    std::stable_sort(ranked.order_ce.begin(), ranked.order_ce.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (ranked.cross_entropy[a] != ranked.cross_entropy[b])
                             return ranked.cross_entropy[a] < ranked.cross_entropy[b];
                         return a < b;
                     });
    std::stable_sort(ranked.order_energy.begin(), ranked.order_energy.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (ranked.energy[a] != ranked.energy[b]) return ranked.energy[a] > ranked.energy[b];
                         return a < b;
                     });
}

std::vector<std::uint32_t> select_top(const RankedFeatureSet& ranked, RankMode mode,
                                      std::size_t m) {
    const auto& order = mode == RankMode::cross_entropy ? ranked.order_ce : ranked.order_energy;
    if (m > order.size()) throw_invalid_input("select_top: m exceeds column count");
    return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m)};
}

} // namespace ph2
