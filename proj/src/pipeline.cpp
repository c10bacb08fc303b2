#include "ph2/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "ph2/error.hpp"
#include "ph2/log.hpp"
#include "ph2/rng.hpp"

namespace ph2 {

namespace {

Eigen::MatrixXd extract_impl(const FeatureTree& tree, std::span<const PointCloud> clouds,
                             bool rotate, Axis axis, double angle) {
    if (clouds.empty()) throw_invalid_input("extract_features: no clouds");
    const auto n = static_cast<std::int64_t>(clouds.size());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(tree.feature_dim()));
    std::string error_msg;
    errc error_kind = errc::invalid_input;
    bool failed = false;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        if (failed) continue;
        try {
            const auto& cloud = clouds[static_cast<std::size_t>(i)];
            const GlobalFeature f =
                rotate ? transform(tree, rotate_about_axis(cloud, axis, angle))
                       : transform(tree, cloud);
            out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(
                f.values.data(), static_cast<Eigen::Index>(f.values.size()));
        } catch (const Error& e) {
#pragma omp critical(ph2_extract_error)
            if (!failed) {
                failed = true;
                error_msg = e.what();
                error_kind = e.kind();
            }
        }
    }
    if (failed) throw Error(error_kind, error_msg);
    return out;
}

} // namespace

Eigen::MatrixXd extract_features(const FeatureTree& tree, std::span<const PointCloud> clouds) {
    return extract_impl(tree, clouds, false, Axis::z, 0.0);
}

Eigen::MatrixXd extract_features_rotated(const FeatureTree& tree,
                                         std::span<const PointCloud> clouds, Axis axis,
                                         double angle) {
    return extract_impl(tree, clouds, true, axis, angle);
}

Eigen::VectorXd column_energies(const FeatureTree& tree) {
    const std::vector<FeatureProvenance> layout = feature_layout(tree);
    Eigen::VectorXd out(static_cast<Eigen::Index>(layout.size()));
    for (std::size_t i = 0; i < layout.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = tree.nodes[layout[i].leaf_node_id].energy;
    return out;
}

Eigen::MatrixXd select_columns(const Eigen::Ref<const Eigen::MatrixXd>& features,
                               const std::vector<std::uint32_t>& columns) {
    Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (static_cast<Eigen::Index>(columns[j]) >= features.cols())
            throw_invalid_input("select_columns: index out of range");
        out.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(columns[j]));
    }
    return out;
}

void train_val_split(std::size_t n, double val_fraction, std::uint64_t seed,
                     std::vector<std::uint32_t>& train_idx, std::vector<std::uint32_t>& val_idx) {
    if (!(val_fraction >= 0.0) || val_fraction >= 1.0)
        throw_invalid_input("train_val_split: fraction must lie in [0, 1)");
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(seed ^ 0x5A1Du);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + bounded(rng, static_cast<std::uint64_t>(n - i));
        std::swap(idx[i], idx[j]);
    }
    const auto n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(n));
    val_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
}

EnsembleModel fit_ensemble(const FeatureTree& tree, std::span<const PointCloud> clouds,
                           const std::vector<int>& labels, int num_classes,
                           const std::vector<std::uint32_t>& selected, Axis axis, int rotations,
                           double ridge, bool standardize) {
    EnsembleModel model;
    model.axis = axis;
    model.angles = ensemble_angles(rotations);
    model.stage1.resize(model.angles.size());

    const auto S = static_cast<Eigen::Index>(clouds.size());
    Eigen::MatrixXd stacked(S, static_cast<Eigen::Index>(model.angles.size()) * num_classes);
    for (std::size_t r = 0; r < model.angles.size(); ++r) {
        Eigen::MatrixXd feats = extract_features_rotated(tree, clouds, axis, model.angles[r]);
        if (!selected.empty()) feats = select_columns(feats, selected);
        model.stage1[r] = fit_llsr(feats, labels, num_classes, ridge, standardize);
        stacked.middleCols(static_cast<Eigen::Index>(r) * num_classes, num_classes) =
            predict_scores(model.stage1[r], feats);
    }
    model.stage2 = fit_llsr(stacked, labels, num_classes, ridge, standardize);
    return model;
}

Eigen::MatrixXd predict_ensemble_scores(const FeatureTree& tree, const EnsembleModel& model,
                                        std::span<const PointCloud> clouds,
                                        const std::vector<std::uint32_t>& selected) {
    if (model.stage1.size() != model.angles.size() || model.angles.empty())
        throw_invalid_state("predict_ensemble_scores: malformed ensemble");
    const int num_classes = model.stage2.num_classes;
    const auto S = static_cast<Eigen::Index>(clouds.size());
    Eigen::MatrixXd stacked(S, static_cast<Eigen::Index>(model.angles.size()) * num_classes);
    for (std::size_t r = 0; r < model.angles.size(); ++r) {
        Eigen::MatrixXd feats =
            extract_features_rotated(tree, clouds, model.axis, model.angles[r]);
        if (!selected.empty()) feats = select_columns(feats, selected);
        stacked.middleCols(static_cast<Eigen::Index>(r) * num_classes, num_classes) =
            predict_scores(model.stage1[r], feats);
    }
    return predict_scores(model.stage2, stacked);
}

ModelContainer fit_pipeline(const Dataset& train, const RunConfig& cfg) {
    cfg.validate();
    if (train.clouds.empty()) throw_insufficient_data("fit_pipeline: empty training set");
    const std::vector<int> labels = train.labels();
    const int M = train.num_classes();

    ModelContainer container;
    container.class_names = train.class_names;
    container.tree = fit_tree(std::span<const PointCloud>(train.clouds), cfg.tree);
    log::info("tree fitted: %zu nodes, %zu leaves, feature dim %zu",
              container.tree.nodes.size(), container.tree.leaf_count(),
              container.tree.feature_dim());

    Eigen::MatrixXd features =
        extract_features(container.tree, std::span<const PointCloud>(train.clouds));

    std::vector<std::uint32_t> selected;
    if (cfg.rank_mode) {
        RankedSelection sel;
        sel.set = rank_features(features, labels, M, cfg.intervals,
                                column_energies(container.tree), cfg.ce_majority_vote);
        sel.mode = *cfg.rank_mode;
        const auto cols = static_cast<std::uint64_t>(features.cols());
        sel.m = cfg.rank_m == 0 ? cols : std::min(cfg.rank_m, cols);
        selected = sel.selected();
        container.ranking = std::move(sel);
        features = select_columns(features, selected);
        log::info("ranking kept %zu of %llu columns (%s)", selected.size(),
                  static_cast<unsigned long long>(cols), rank_mode_name(*cfg.rank_mode));
    }

    if (cfg.ensemble) {
        // Stage-1 features for angle 0 are recomputed inside fit_ensemble;
        // passing the unrotated matrix through would save one extraction but
        // special-cases the code path for no behavioral difference.
        container.ensemble = fit_ensemble(container.tree, std::span<const PointCloud>(train.clouds),
                                          labels, M, selected, cfg.rotation_axis, cfg.rotations,
                                          cfg.ridge, cfg.standardize);
    } else {
        container.llsr = fit_llsr(features, labels, M, cfg.ridge, cfg.standardize);
    }
    return container;
}

std::vector<int> predict_with_model(const ModelContainer& container,
                                    std::span<const PointCloud> clouds) {
    std::vector<std::uint32_t> selected;
    if (container.ranking) selected = container.ranking->selected();

    if (container.ensemble)
        return argmax_rows(predict_ensemble_scores(container.tree, *container.ensemble, clouds,
                                                   selected));
    if (!container.llsr) throw_invalid_state("model container holds no classifier");
    Eigen::MatrixXd features = extract_features(container.tree, clouds);
    if (!selected.empty()) features = select_columns(features, selected);
    return predict(*container.llsr, features);
}

Metrics evaluate_model(const ModelContainer& container, const Dataset& data) {
    const std::vector<int> predictions =
        predict_with_model(container, std::span<const PointCloud>(data.clouds));
    const int M = container.class_names.empty() ? data.num_classes()
                                                : static_cast<int>(container.class_names.size());
    return evaluate(predictions, data.labels(), M);
}

} // namespace ph2
