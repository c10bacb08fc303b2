// ph2: train, evaluate, and analyze point-cloud classification models.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "ph2/dataset_io.hpp"
#include "ph2/error.hpp"
#include "ph2/log.hpp"
#include "ph2/model_io.hpp"
#include "ph2/pipeline.hpp"
#include "ph2/run_config.hpp"
#include "ph2/saab.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CommonArgs {
    std::string config_path;
    std::string data_root;
    std::string model_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value run configuration file");
    cmd->add_option("--data", args.data_root, "dataset root (split/class/sample.xyz layout)");
    cmd->add_option("--model", args.model_path, "model container path");
    cmd->add_option("--out", args.out_path, "output file path");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--threads", args.threads, "worker threads (0 = library default)");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
}

ph2::RunConfig resolve_config(const CommonArgs& args) {
    ph2::RunConfig cfg;
    if (!args.config_path.empty()) cfg = ph2::load_run_config(args.config_path);
    for (const std::string& kv : args.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            ph2::throw_config_error("--set expects key=value, got '" + kv + "'");
        ph2::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.data_root.empty()) cfg.data_root = args.data_root;
    if (!args.model_path.empty()) cfg.model_path = args.model_path;
    if (!args.out_path.empty()) cfg.out_path = args.out_path;
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
#ifdef _OPENMP
    if (args.threads > 0) omp_set_num_threads(args.threads);
#endif
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    if (path.empty()) ph2::throw_config_error("an output path is required (--out)");
    std::ofstream out(path, std::ios::trunc);
    if (!out) ph2::throw_io_error("cannot open '" + path + "' for writing");
    return out;
}

ph2::Dataset load_split(const ph2::RunConfig& cfg, const std::string& split) {
    if (cfg.data_root.empty()) ph2::throw_config_error("a dataset root is required (--data)");
    return ph2::load_xyz_dir(cfg.data_root, split);
}

ph2::ModelContainer load_model_arg(const ph2::RunConfig& cfg) {
    if (cfg.model_path.empty()) ph2::throw_config_error("a model path is required (--model)");
    return ph2::load_model(cfg.model_path);
}

std::vector<double> parse_double_list(const std::string& raw, const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        const std::size_t comma = raw.find(',', start);
        const std::string item =
            comma == std::string::npos ? raw.substr(start) : raw.substr(start, comma - start);
        if (!item.empty()) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(item, &pos);
                if (pos != item.size()) throw std::invalid_argument(item);
                out.push_back(v);
            } catch (...) {
                ph2::throw_config_error(std::string("malformed ") + what + " list entry '" + item +
                                        "'");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) ph2::throw_config_error(std::string("empty ") + what + " list");
    return out;
}

std::vector<int> parse_size_list(const std::string& raw, const char* what) {
    std::vector<int> out;
    for (double v : parse_double_list(raw, what)) {
        if (v < 1.0 || v != static_cast<double>(static_cast<int>(v)))
            ph2::throw_config_error(std::string("malformed ") + what + " list");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

ph2::Dataset subset(const ph2::Dataset& ds, const std::vector<std::uint32_t>& idx) {
    ph2::Dataset out;
    out.class_names = ds.class_names;
    out.split = ds.split;
    out.clouds.reserve(idx.size());
    for (std::uint32_t i : idx) {
        out.clouds.push_back(ds.clouds[i]);
        if (i < ds.sources.size()) out.sources.push_back(ds.sources[i]);
    }
    return out;
}

int cmd_fit(const CommonArgs& args) {
    const ph2::RunConfig cfg = resolve_config(args);
    if (cfg.model_path.empty())
        ph2::throw_config_error("fit needs a model output path (--model)");
    const ph2::Dataset train = load_split(cfg, "train");

    const auto t0 = Clock::now();
    const ph2::ModelContainer model = ph2::fit_pipeline(train, cfg);
    const double fit_s = seconds_since(t0);
    ph2::save_model(model, cfg.model_path);

    std::printf("leaf_count = %zu\n", model.tree.leaf_count());
    std::printf("feature_dim = %zu\n", model.tree.feature_dim());
    const std::size_t floats = model.tree.filter_float_count();
    std::printf("filter_floats = %zu (%zu bytes)\n", floats, floats * 8);
    std::printf("leaf_energy_sum = %.6f\n", model.tree.leaf_energy_sum());
    std::printf("fit_seconds = %.3f\n", fit_s);
    std::printf("model = %s\n", cfg.model_path.c_str());
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& split) {
    const ph2::RunConfig cfg = resolve_config(args);
    const ph2::ModelContainer model = load_model_arg(cfg);
    const ph2::Dataset data = load_split(cfg, split);

    const auto t0 = Clock::now();
    const ph2::Metrics m = ph2::evaluate_model(model, data);
    std::printf("split = %s\n", split.c_str());
    std::printf("overall_accuracy = %.6f\n", m.overall_accuracy);
    std::printf("class_avg_accuracy = %.6f\n", m.class_avg_accuracy);
    std::printf("eval_seconds = %.3f\n", seconds_since(t0));

    if (!cfg.out_path.empty()) {
        std::ofstream out = open_out(cfg.out_path);
        out << "true,pred,count\n";
        for (Eigen::Index t = 0; t < m.confusion.rows(); ++t)
            for (Eigen::Index p = 0; p < m.confusion.cols(); ++p)
                out << data.class_names[static_cast<std::size_t>(t)] << ','
                    << data.class_names[static_cast<std::size_t>(p)] << ','
                    << m.confusion(t, p) << '\n';
        if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");
    }
    return 0;
}

int cmd_predict(const CommonArgs& args, const std::vector<std::string>& inputs) {
    const ph2::RunConfig cfg = resolve_config(args);
    const ph2::ModelContainer model = load_model_arg(cfg);

    std::vector<ph2::PointCloud> clouds;
    clouds.reserve(inputs.size());
    for (const std::string& path : inputs) clouds.push_back(ph2::load_xyz_file(path));
    const std::vector<int> pred =
        ph2::predict_with_model(model, std::span<const ph2::PointCloud>(clouds));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int c = pred[i];
        const std::string name = c >= 0 && static_cast<std::size_t>(c) < model.class_names.size()
                                     ? model.class_names[static_cast<std::size_t>(c)]
                                     : std::to_string(c);
        std::printf("%s %d %s\n", inputs[i].c_str(), c, name.c_str());
    }
    return 0;
}

int cmd_rank(const CommonArgs& args) {
    const ph2::RunConfig cfg = resolve_config(args);
    const ph2::ModelContainer model = load_model_arg(cfg);
    const ph2::Dataset train = load_split(cfg, "train");

    const Eigen::MatrixXd features =
        ph2::extract_features(model.tree, std::span<const ph2::PointCloud>(train.clouds));
    const ph2::RankedFeatureSet ranked =
        ph2::rank_features(features, train.labels(), train.num_classes(), cfg.intervals,
                           ph2::column_energies(model.tree), cfg.ce_majority_vote);

    // rank position per column under both orderings
    std::vector<std::size_t> rank_ce(ranked.order_ce.size()), rank_energy(ranked.order_ce.size());
    for (std::size_t r = 0; r < ranked.order_ce.size(); ++r) rank_ce[ranked.order_ce[r]] = r;
    for (std::size_t r = 0; r < ranked.order_energy.size(); ++r)
        rank_energy[ranked.order_energy[r]] = r;

    std::ofstream out = open_out(cfg.out_path);
    out << "node_id,aggregation,energy,cross_entropy,rank_ce,rank_energy\n";
    const std::vector<ph2::FeatureProvenance> layout = ph2::feature_layout(model.tree);
    char buf[64];
    for (std::size_t c = 0; c < layout.size(); ++c) {
        out << layout[c].leaf_node_id << ',' << ph2::aggregation_name(layout[c].aggregation);
        std::snprintf(buf, sizeof buf, ",%.17g", ranked.energy[static_cast<Eigen::Index>(c)]);
        out << buf;
        std::snprintf(buf, sizeof buf, ",%.17g", ranked.cross_entropy[static_cast<Eigen::Index>(c)]);
        out << buf << ',' << rank_ce[c] << ',' << rank_energy[c] << '\n';
    }
    if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");
    std::printf("columns = %zu\n", layout.size());
    std::printf("csv = %s\n", cfg.out_path.c_str());
    return 0;
}

int cmd_sweep_threshold(const CommonArgs& args, const std::string& t_list) {
    ph2::RunConfig cfg = resolve_config(args);
    const std::vector<double> thresholds = parse_double_list(t_list, "threshold");
    if (!(cfg.val_fraction > 0.0))
        ph2::throw_config_error("sweep-threshold needs val_fraction > 0");
    const ph2::Dataset full = load_split(cfg, "train");

    std::vector<std::uint32_t> train_idx, val_idx;
    ph2::train_val_split(full.size(), cfg.val_fraction, cfg.seed, train_idx, val_idx);
    const ph2::Dataset train = subset(full, train_idx);
    const ph2::Dataset val = subset(full, val_idx);

    std::ofstream out = open_out(cfg.out_path);
    out << "T,train_acc,val_acc\n";
    for (double T : thresholds) {
        ph2::RunConfig c = cfg;
        c.tree.energy_threshold = T;
        c.validate();
        const ph2::ModelContainer model = ph2::fit_pipeline(train, c);
        const double train_acc = ph2::evaluate_model(model, train).overall_accuracy;
        const double val_acc = ph2::evaluate_model(model, val).overall_accuracy;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f\n", T, train_acc, val_acc);
        out << buf;
        ph2::log::info("T=%g train=%.4f val=%.4f leaves=%zu", T, train_acc, val_acc,
                       model.tree.leaf_count());
    }
    if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");
    std::printf("rows = %zu\n", thresholds.size());
    std::printf("csv = %s\n", cfg.out_path.c_str());
    return 0;
}

int cmd_sweep_features(const CommonArgs& args, const std::string& m_list,
                       const std::string& mode_arg) {
    ph2::RunConfig cfg = resolve_config(args);
    const std::vector<int> ms = parse_size_list(m_list, "feature-count");
    if (!(cfg.val_fraction > 0.0))
        ph2::throw_config_error("sweep-features needs val_fraction > 0");

    std::vector<ph2::RankMode> modes;
    if (mode_arg == "both")
        modes = {ph2::RankMode::cross_entropy, ph2::RankMode::energy};
    else
        modes = {ph2::rank_mode_from_name(mode_arg)};

    const ph2::ModelContainer model = load_model_arg(cfg);
    const ph2::Dataset full = load_split(cfg, "train");
    std::vector<std::uint32_t> train_idx, val_idx;
    ph2::train_val_split(full.size(), cfg.val_fraction, cfg.seed, train_idx, val_idx);
    const ph2::Dataset train = subset(full, train_idx);
    const ph2::Dataset val = subset(full, val_idx);

    const Eigen::MatrixXd train_feats =
        ph2::extract_features(model.tree, std::span<const ph2::PointCloud>(train.clouds));
    const Eigen::MatrixXd val_feats =
        ph2::extract_features(model.tree, std::span<const ph2::PointCloud>(val.clouds));
    const std::vector<int> train_labels = train.labels();
    const std::vector<int> val_labels = val.labels();
    const int M = full.num_classes();

    const ph2::RankedFeatureSet ranked =
        ph2::rank_features(train_feats, train_labels, M, cfg.intervals,
                           ph2::column_energies(model.tree), cfg.ce_majority_vote);

    std::ofstream out = open_out(cfg.out_path);
    out << "m,mode,train_acc,val_acc\n";
    std::size_t rows = 0;
    for (ph2::RankMode mode : modes) {
        for (int m : ms) {
            if (static_cast<Eigen::Index>(m) > train_feats.cols())
                ph2::throw_config_error("m exceeds feature dimension");
            const std::vector<std::uint32_t> cols =
                ph2::select_top(ranked, mode, static_cast<std::size_t>(m));
            const ph2::LLSRModel clf =
                ph2::fit_llsr(ph2::select_columns(train_feats, cols), train_labels, M, cfg.ridge,
                              cfg.standardize);
            const double train_acc =
                ph2::evaluate(ph2::predict(clf, ph2::select_columns(train_feats, cols)),
                              train_labels, M)
                    .overall_accuracy;
            const double val_acc =
                ph2::evaluate(ph2::predict(clf, ph2::select_columns(val_feats, cols)), val_labels,
                              M)
                    .overall_accuracy;
            char buf[96];
            std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f\n", m, ph2::rank_mode_name(mode),
                          train_acc, val_acc);
            out << buf;
            ++rows;
        }
    }
    if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");
    std::printf("rows = %zu\n", rows);
    std::printf("csv = %s\n", cfg.out_path.c_str());
    return 0;
}

int cmd_bench_density(const CommonArgs& args, const std::string& size_list) {
    const ph2::RunConfig cfg = resolve_config(args);
    const std::vector<int> sizes = parse_size_list(size_list, "size");
    const ph2::ModelContainer model = load_model_arg(cfg);
    const ph2::Dataset test = load_split(cfg, "test");

    std::ofstream out = open_out(cfg.out_path);
    out << "size,overall_acc,class_avg_acc\n";
    for (int size : sizes) {
        ph2::Dataset sampled;
        sampled.class_names = test.class_names;
        sampled.split = test.split;
        sampled.clouds.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            sampled.clouds.push_back(ph2::subsample(test.clouds[i], static_cast<std::size_t>(size),
                                                    cfg.seed + 0x1000003u * (i + 1) +
                                                        static_cast<std::uint64_t>(size)));
        const ph2::Metrics m = ph2::evaluate_model(model, sampled);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", size, m.overall_accuracy,
                      m.class_avg_accuracy);
        out << buf;
        ph2::log::info("size=%d overall=%.4f class_avg=%.4f", size, m.overall_accuracy,
                       m.class_avg_accuracy);
    }
    if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");
    std::printf("rows = %zu\n", sizes.size());
    std::printf("csv = %s\n", cfg.out_path.c_str());
    return 0;
}

int cmd_report_correlation(const CommonArgs& args, const std::string& split) {
    const ph2::RunConfig cfg = resolve_config(args);
    const ph2::ModelContainer model = load_model_arg(cfg);
    const ph2::Dataset data = load_split(cfg, split);

    const int d = model.tree.root_bank.input_dim;
    Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(d, d);
    std::int64_t rows = 0;
    for (const ph2::PointCloud& cloud : data.clouds) {
        const Eigen::MatrixXd attrs = ph2::hop0_attributes(model.tree.config, cloud);
        const Eigen::MatrixXd coeffs = ph2::apply_saab(model.tree.root_bank, attrs);
        second_moment.noalias() += coeffs.transpose() * coeffs;
        rows += coeffs.rows();
    }
    if (rows < 2) ph2::throw_insufficient_data("not enough rows for a correlation estimate");
    const Eigen::MatrixXd cor = second_moment / static_cast<double>(rows);

    double max_diag = 0.0;
    for (int i = 0; i < d; ++i) max_diag = std::max(max_diag, cor(i, i));
    double max_ac_ac = 0.0, max_dc_ac = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            const double denom = std::sqrt(std::max(cor(i, i) * cor(j, j), 1e-300));
            const double normalized = std::abs(cor(i, j)) / denom;
            if (i == 0 || j == 0)
                max_dc_ac = std::max(max_dc_ac, normalized);
            else
                max_ac_ac = std::max(max_ac_ac, std::abs(cor(i, j)));
        }
    }

    std::ofstream out = open_out(cfg.out_path);
    char buf[48];
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", cor(i, j));
            out << buf << (j + 1 < d ? "," : "\n");
        }
    }
    if (!out) ph2::throw_io_error("write failure on '" + cfg.out_path + "'");

    std::printf("rows = %lld\n", static_cast<long long>(rows));
    std::printf("dim = %d\n", d);
    std::printf("max_diag = %.17g\n", max_diag);
    std::printf("max_ac_ac_offdiag = %.17g\n", max_ac_ac);
    std::printf("max_ac_ac_ratio = %.17g\n", max_diag > 0 ? max_ac_ac / max_diag : 0.0);
    std::printf("max_dc_ac_normalized = %.17g\n", max_dc_ac);
    std::printf("csv = %s\n", cfg.out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-cloud classification with cascaded octant filter banks"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string eval_split = "test";
    std::string corr_split = "train";
    std::vector<std::string> predict_inputs;
    std::string t_list, m_list, size_list = "1024,768,512,256";
    std::string feature_mode = "both";

    CLI::App* fit = app.add_subcommand("fit", "fit a model on the train split");
    add_common(fit, args);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a model on a split");
    add_common(eval, args);
    eval->add_option("--split", eval_split, "dataset split to evaluate (default test)");

    CLI::App* predict = app.add_subcommand("predict", "classify .xyz files");
    add_common(predict, args);
    predict->add_option("inputs", predict_inputs, "input .xyz files")->required();

    CLI::App* rank = app.add_subcommand("rank", "score and rank leaf features");
    add_common(rank, args);

    CLI::App* sweep_t = app.add_subcommand("sweep-threshold", "retrain across energy thresholds");
    add_common(sweep_t, args);
    sweep_t->add_option("--thresholds", t_list, "comma-separated T values")->required();

    CLI::App* sweep_f = app.add_subcommand("sweep-features", "accuracy across feature counts");
    add_common(sweep_f, args);
    sweep_f->add_option("--m-list", m_list, "comma-separated feature counts")->required();
    sweep_f->add_option("--mode", feature_mode, "cross_entropy|energy|both (default both)");

    CLI::App* bench = app.add_subcommand("bench-density", "accuracy across test sampling sizes");
    add_common(bench, args);
    bench->add_option("--sizes", size_list, "comma-separated point counts");

    CLI::App* corr = app.add_subcommand("report-correlation", "first-stage coefficient correlations");
    add_common(corr, args);
    corr->add_option("--split", corr_split, "dataset split to use (default train)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "ERROR:Usage:" << e.what() << "\n";
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(args);
        if (eval->parsed()) return cmd_eval(args, eval_split);
        if (predict->parsed()) return cmd_predict(args, predict_inputs);
        if (rank->parsed()) return cmd_rank(args);
        if (sweep_t->parsed()) return cmd_sweep_threshold(args, t_list);
        if (sweep_f->parsed()) return cmd_sweep_features(args, m_list, feature_mode);
        if (bench->parsed()) return cmd_bench_density(args, size_list);
        if (corr->parsed()) return cmd_report_correlation(args, corr_split);
    } catch (const ph2::Error& e) {
        std::cerr << "ERROR:" << e.kind_name() << ":" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR:Internal:" << e.what() << "\n";
        return 1;
    }
    return 0;
}
