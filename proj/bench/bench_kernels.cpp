// Kernel benchmark: times the production implementations against the naive
// serial references and fails if any pair disagrees, so the speed numbers
// are always attached to a correctness check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ph2/feature_tree.hpp"
#include "ph2/geometry.hpp"
#include "ph2/rng.hpp"
#include "ph2/saab.hpp"
#include "ref.hpp"

using namespace ph2;
using Clock = std::chrono::steady_clock;

namespace {

struct Sizes {
    std::size_t fps_n, fps_m;
    std::size_t knn_n, knn_centers, knn_k;
    std::size_t attr_n, attr_centers, attr_k;
    std::size_t saab_rows;
    int reps;
};

constexpr Sizes kFull{3072, 768, 4096, 1024, 64, 2048, 512, 32, 20000, 5};
constexpr Sizes kQuick{768, 192, 1024, 256, 32, 512, 128, 16, 4000, 2};

std::vector<Vec3> random_points(std::size_t n, Rng& rng) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({gaussian(rng), gaussian(rng), gaussian(rng)});
    return pts;
}

// Best wall time over `reps` runs of fn (first run included: every run must
// produce the checked output, so there is no separate warmup).
template <typename Fn>
double time_best(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return best;
}

bool g_all_match = true;

void report(const char* kernel, const std::string& size, double ref_s, double prod_s,
            bool match) {
    std::printf("%-12s %-26s %10.2f %10.2f %8.2fx   %s\n", kernel, size.c_str(), ref_s * 1e3,
                prod_s * 1e3, prod_s > 0 ? ref_s / prod_s : 0.0, match ? "ok" : "MISMATCH");
    if (!match) g_all_match = false;
}

void bench_fps(const Sizes& s, Rng& rng) {
    const std::vector<Vec3> pts = random_points(s.fps_n, rng);
    std::vector<std::uint32_t> got, want;
    const double ref_s = time_best(s.reps, [&] { want = ref::fps_bruteforce(pts, s.fps_m); });
    const double prod_s = time_best(s.reps, [&] { got = farthest_point_sample(pts, s.fps_m); });
    report("fps", std::to_string(s.fps_n) + " pts -> " + std::to_string(s.fps_m), ref_s, prod_s,
           got == want);
}

void bench_knn(const Sizes& s, Rng& rng) {
    const std::vector<Vec3> pts = random_points(s.knn_n, rng);
    std::vector<std::uint32_t> centers(s.knn_centers);
    for (std::size_t i = 0; i < s.knn_centers; ++i)
        centers[i] = static_cast<std::uint32_t>(bounded(rng, s.knn_n));

    std::vector<std::vector<std::uint32_t>> got(s.knn_centers), want(s.knn_centers);
    const double ref_s = time_best(s.reps, [&] {
        for (std::size_t i = 0; i < s.knn_centers; ++i)
            want[i] = ref::knn_linear(pts, centers[i], s.knn_k);
    });
    const double prod_s = time_best(s.reps, [&] {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.knn_centers); ++i)
            got[static_cast<std::size_t>(i)] =
                knn(pts, centers[static_cast<std::size_t>(i)], s.knn_k).neighbor_indices;
    });
    report("knn",
           std::to_string(s.knn_centers) + " queries, k=" + std::to_string(s.knn_k) + ", n=" +
               std::to_string(s.knn_n),
           ref_s, prod_s, got == want);
}

void bench_attributes(const Sizes& s, Rng& rng) {
    const std::vector<Vec3> pts = random_points(s.attr_n, rng);
    const std::vector<std::uint32_t> centers = farthest_point_sample(pts, s.attr_centers);

    Eigen::MatrixXd attrs(static_cast<Eigen::Index>(s.attr_n), 3);
    ref::Matrix ref_attrs(s.attr_n, 3);
    for (std::size_t i = 0; i < s.attr_n; ++i)
        for (int c = 0; c < 3; ++c) {
            attrs(static_cast<Eigen::Index>(i), c) = pts[i][static_cast<std::size_t>(c)];
            ref_attrs.at(i, static_cast<std::size_t>(c)) = pts[i][static_cast<std::size_t>(c)];
        }

    Eigen::MatrixXd got;
    ref::Matrix want;
    const double ref_s =
        time_best(s.reps, [&] { want = ref::attributes_naive(pts, ref_attrs, centers, s.attr_k); });
    const double prod_s = time_best(s.reps, [&] { got = build_attributes(pts, centers, s.attr_k, attrs); });

    bool match = got.rows() == static_cast<Eigen::Index>(want.rows) &&
                 got.cols() == static_cast<Eigen::Index>(want.cols);
    double max_diff = 0.0;
    if (match)
        for (Eigen::Index r = 0; r < got.rows(); ++r)
            for (Eigen::Index c = 0; c < got.cols(); ++c)
                max_diff = std::max(max_diff, std::abs(got(r, c) -
                                                       want.at(static_cast<std::size_t>(r),
                                                               static_cast<std::size_t>(c))));
    match = match && max_diff < 1e-9;
    report("attributes",
           std::to_string(s.attr_centers) + " centers, k=" + std::to_string(s.attr_k), ref_s,
           prod_s, match);
}

void bench_saab_fit(const Sizes& s, Rng& rng) {
    const int d = 24;
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(s.saab_rows), d);
    ref::Matrix ref_samples(s.saab_rows, static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < s.saab_rows; ++r)
        for (int c = 0; c < d; ++c) {
            const double v = gaussian(rng) * std::pow(0.85, c);
            samples(static_cast<Eigen::Index>(r), c) = v;
            ref_samples.at(r, static_cast<std::size_t>(c)) = v;
        }

    SaabFilterBank bank;
    std::vector<double> ref_values;
    ref::Matrix ref_vectors;
    double ref_dc = 0.0;
    const double ref_s = time_best(s.reps, [&] {
        const ref::Matrix cov = ref::residual_covariance(ref_samples);
        ref::jacobi_eigh(cov, ref_values, ref_vectors);
        ref_dc = ref::dc_variance(ref_samples);
    });
    const double prod_s = time_best(s.reps, [&] { bank = fit_saab(samples); });

    bool match = std::abs(bank.eigenvalues(0) - ref_dc) <=
                 1e-8 * std::max(1.0, std::abs(ref_dc));
    for (int i = 0; i + 1 < d && match; ++i) {
        const double want = ref_values[static_cast<std::size_t>(i)];
        if (std::abs(bank.eigenvalues(i + 1) - want) > 1e-8 * std::max(1.0, std::abs(want)))
            match = false;
        for (int c = 0; c < d && match; ++c)
            if (std::abs(bank.ac_weights(i, c) -
                         ref_vectors.at(static_cast<std::size_t>(i), static_cast<std::size_t>(c))) >
                1e-6)
                match = false;
    }
    report("saab-fit", std::to_string(s.saab_rows) + " rows, d=" + std::to_string(d), ref_s,
           prod_s, match);
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) {
            quick = true;
        } else {
            std::fprintf(stderr, "usage: %s [--quick]\n", argv[0]);
            return 2;
        }
    }
    const Sizes& s = quick ? kQuick : kFull;

    std::printf("%-12s %-26s %10s %10s %9s   %s\n", "kernel", "size", "serial_ms", "prod_ms",
                "speedup", "check");
    Rng rng(2024);
    bench_fps(s, rng);
    bench_knn(s, rng);
    bench_attributes(s, rng);
    bench_saab_fit(s, rng);

    if (!g_all_match) {
        std::printf("FAIL: at least one kernel disagrees with its reference\n");
        return 1;
    }
    std::printf("all kernels match their serial references\n");
    return 0;
}
