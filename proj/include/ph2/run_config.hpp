#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ph2/feature_tree.hpp"
#include "ph2/geometry.hpp"
#include "ph2/ranking.hpp"

namespace ph2 {

// Everything a run needs, parsed from a "key = value" text file plus
// command-line overrides. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
    TreeConfig tree;

    int intervals = 32;                     // key J: intervals per column for CE scoring
    std::optional<RankMode> rank_mode;      // key rank_mode: none|cross_entropy|energy
    std::uint64_t rank_m = 0;               // key rank_m: columns kept, 0 = all
    bool ce_majority_vote = false;

    bool ensemble = false;
    int rotations = 8;
    Axis rotation_axis = Axis::z;
    bool standardize = true;
    double ridge = 1e-6;

    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    std::string data_root;
    std::string model_path;
    std::string out_path;

    void validate() const;
};

RunConfig load_run_config(const std::string& path);

// Apply one "key=value" override (the --set flag and the file parser share
// this). Unknown key or malformed value -> ConfigError.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

} // namespace ph2
