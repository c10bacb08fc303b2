#include "ph2/dataset_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "ph2/error.hpp"
#include "ph2/log.hpp"

namespace fs = std::filesystem;

namespace ph2 {

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(clouds.size());
    for (const PointCloud& c : clouds) {
        if (!c.label) throw_invalid_state("dataset cloud without a label");
        out.push_back(*c.label);
    }
    return out;
}

namespace {

bool parse_double(const char* begin, const char* end, double& out) {
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

} // namespace

PointCloud load_xyz_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io_error("cannot open '" + path + "'");
    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> tokens;
    while (std::getline(in, line)) {
        ++line_no;
        tokens.clear();
        const char* s = line.c_str();
        const char* e = s + line.size();
        const char* p = s;
        while (p < e) {
            while (p < e && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) ++p;
            const char* start = p;
            while (p < e && *p != ' ' && *p != '\t' && *p != '\r' && *p != ',') ++p;
            if (p > start) tokens.emplace_back(start, static_cast<std::size_t>(p - start));
        }
        if (tokens.empty()) continue;
        if (tokens.size() < 3)
            throw_io_error(path + ":" + std::to_string(line_no) +
                           ": expected at least 3 numeric columns");
        Vec3 pt{};
        for (int c = 0; c < 3; ++c) {
            if (!parse_double(tokens[c].data(), tokens[c].data() + tokens[c].size(), pt[c]))
                throw_io_error(path + ":" + std::to_string(line_no) + ": malformed number '" +
                               std::string(tokens[c]) + "'");
        }
        cloud.points.push_back(pt);
    }
    if (in.bad()) throw_io_error("read failure on '" + path + "'");
    if (cloud.points.empty()) throw_io_error("'" + path + "' contains no points");
    return cloud;
}

void save_xyz_file(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io_error("cannot open '" + path + "' for writing");
    char buf[96];
    for (const Vec3& p : cloud.points) {
        const int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
        out.write(buf, n);
    }
    if (!out) throw_io_error("write failure on '" + path + "'");
}

Dataset load_xyz_dir(const std::string& root, const std::string& split) {
    const fs::path base = fs::path(root) / split;
    std::error_code ec;
    if (!fs::is_directory(base, ec))
        throw_io_error("dataset split directory '" + base.string() + "' not found");

    Dataset ds;
    ds.split = split;
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(base)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw_io_error("no class directories under '" + base.string() + "'");

    struct FileRef {
        std::string path;
        int label;
    };
    std::vector<FileRef> files;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        ds.class_names.push_back(class_dirs[c].filename().string());
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(class_dirs[c])) {
            if (entry.is_regular_file() && entry.path().extension() == ".xyz")
                names.push_back(entry.path().string());
        }
        std::sort(names.begin(), names.end());
        if (names.empty())
            log::warn("class directory '%s' has no .xyz files", class_dirs[c].string().c_str());
        for (std::string& n : names) files.push_back({std::move(n), static_cast<int>(c)});
    }

    ds.clouds.resize(files.size());
    ds.sources.resize(files.size());
    // Parallel parse is safe: slots are disjoint and order is fixed by the
    // sorted file list. Errors are carried out of the region by hand.
    std::string error_msg;
    errc error_kind = errc::io_error;
    bool failed = false;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(files.size()); ++i) {
        if (failed) continue;
        try {
            PointCloud c = load_xyz_file(files[static_cast<std::size_t>(i)].path);
            c.label = files[static_cast<std::size_t>(i)].label;
            ds.clouds[static_cast<std::size_t>(i)] = std::move(c);
            ds.sources[static_cast<std::size_t>(i)] = files[static_cast<std::size_t>(i)].path;
        } catch (const Error& e) {
#pragma omp critical(ph2_dataset_error)
            if (!failed) {
                failed = true;
                error_msg = e.what();
                error_kind = e.kind();
            }
        }
    }
    if (failed) throw Error(error_kind, error_msg);
    log::info("loaded %zu clouds across %zu classes from '%s'", ds.clouds.size(),
              ds.class_names.size(), base.string().c_str());
    return ds;
}

PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
    const std::size_t N = cloud.points.size();
    if (n < 1) throw_invalid_input("subsample: n must be positive");
    if (N == 0) throw_invalid_input("subsample: empty cloud");

    Rng rng(seed);
    PointCloud out;
    out.label = cloud.label;
    out.points.reserve(n);
    if (n <= N) {
        std::vector<std::uint32_t> idx(N);
        std::iota(idx.begin(), idx.end(), 0u);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + bounded(rng, static_cast<std::uint64_t>(N - i));
            std::swap(idx[i], idx[j]);
            out.points.push_back(cloud.points[idx[i]]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out.points.push_back(cloud.points[bounded(rng, static_cast<std::uint64_t>(N))]);
    }
    return out;
}

} // namespace ph2
