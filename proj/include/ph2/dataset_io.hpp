#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ph2/point_cloud.hpp"
#include "ph2/rng.hpp"

namespace ph2 {

struct Dataset {
    std::vector<PointCloud> clouds;
    std::vector<std::string> class_names; // sorted, label = index
    std::vector<std::string> sources;     // file path per cloud
    std::string split;

    std::size_t size() const { return clouds.size(); }
    int num_classes() const { return static_cast<int>(class_names.size()); }
    std::vector<int> labels() const;
};

// Load `root/<split>/<class_name>/*.xyz`. Each file holds one cloud as ASCII
// lines "x y z" (extra columns ignored, blank lines skipped). Classes and
// files are visited in lexicographic order so label indices are stable
// across machines.
Dataset load_xyz_dir(const std::string& root, const std::string& split);

// Parse a single cloud file; errors name the file and line.
PointCloud load_xyz_file(const std::string& path);

void save_xyz_file(const PointCloud& cloud, const std::string& path);

// Uniform sample of n points: without replacement when n <= size (a partial
// Fisher-Yates pass, so n = size yields a permutation), with replacement
// otherwise. Reproducible for a given seed.
PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

} // namespace ph2
