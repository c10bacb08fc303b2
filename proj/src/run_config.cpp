#include "ph2/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "ph2/error.hpp"

namespace ph2 {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw_config_error("invalid value '" + value + "' for key '" + key + "'");
}

long long parse_ll(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) bad_value(key, value);
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        bad_value(key, value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "off" || value == "no") return false;
    bad_value(key, value);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const std::string& item : split_list(value))
        out.push_back(static_cast<int>(parse_ll(key, item)));
    if (out.empty()) bad_value(key, value);
    return out;
}

} // namespace

void RunConfig::validate() const {
    tree.validate();
    if (intervals < 2) throw_config_error("J must be at least 2");
    if (rotations < 1) throw_config_error("rotations must be at least 1");
    if (!(ridge >= 0.0)) throw_config_error("ridge must be nonnegative");
    if (!(val_fraction >= 0.0) || val_fraction >= 1.0)
        throw_config_error("val_fraction must lie in [0, 1)");
}

void apply_config_entry(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key.empty()) throw_config_error("empty config key");

    if (key == "num_hops") {
        cfg.tree.num_hops = static_cast<int>(parse_ll(key, value));
    } else if (key == "k_per_hop") {
        cfg.tree.k_per_hop = parse_int_list(key, value);
    } else if (key == "points_per_hop") {
        cfg.tree.points_per_hop = parse_int_list(key, value);
    } else if (key == "energy_threshold") {
        cfg.tree.energy_threshold = parse_f64(key, value);
    } else if (key == "aggregations") {
        std::vector<Aggregation> aggs;
        for (const std::string& item : split_list(value)) aggs.push_back(aggregation_from_name(item));
        std::sort(aggs.begin(), aggs.end());
        aggs.erase(std::unique(aggs.begin(), aggs.end()), aggs.end());
        if (aggs.empty()) bad_value(key, value);
        cfg.tree.aggregations = aggs;
    } else if (key == "normalize") {
        cfg.tree.normalize_input = parse_bool(key, value);
    } else if (key == "drop_below_threshold") {
        cfg.tree.drop_below_threshold = parse_bool(key, value);
    } else if (key == "J") {
        cfg.intervals = static_cast<int>(parse_ll(key, value));
    } else if (key == "rank_mode") {
        if (value == "none")
            cfg.rank_mode.reset();
        else
            cfg.rank_mode = rank_mode_from_name(value);
    } else if (key == "rank_m") {
        cfg.rank_m = parse_u64(key, value);
    } else if (key == "ce_majority_vote") {
        cfg.ce_majority_vote = parse_bool(key, value);
    } else if (key == "ensemble") {
        cfg.ensemble = parse_bool(key, value);
    } else if (key == "rotations") {
        cfg.rotations = static_cast<int>(parse_ll(key, value));
    } else if (key == "rotation_axis") {
        if (value == "x")
            cfg.rotation_axis = Axis::x;
        else if (value == "y")
            cfg.rotation_axis = Axis::y;
        else if (value == "z")
            cfg.rotation_axis = Axis::z;
        else
            bad_value(key, value);
    } else if (key == "standardize") {
        cfg.standardize = parse_bool(key, value);
    } else if (key == "ridge") {
        cfg.ridge = parse_f64(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "val_fraction") {
        cfg.val_fraction = parse_f64(key, value);
    } else if (key == "data_root") {
        cfg.data_root = value;
    } else if (key == "model_path") {
        cfg.model_path = value;
    } else if (key == "out_path") {
        cfg.out_path = value;
    } else {
        throw_config_error("unknown config key '" + key + "'");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io_error("cannot open config '" + path + "'");
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw_config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            apply_config_entry(cfg, t.substr(0, eq), t.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(e.kind(),
                        path + ":" + std::to_string(line_no) + ": " + std::string(e.what()));
        }
    }
    if (in.bad()) throw_io_error("read failure on '" + path + "'");
    return cfg;
}

} // namespace ph2
