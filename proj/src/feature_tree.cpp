#include "ph2/feature_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

#include "ph2/error.hpp"
#include "ph2/geometry.hpp"
#include "ph2/log.hpp"

namespace ph2 {

const char* aggregation_name(Aggregation a) {
    switch (a) {
        case Aggregation::mean: return "mean";
        case Aggregation::max: return "max";
        case Aggregation::l1: return "l1";
        case Aggregation::l2: return "l2";
    }
    return "?";
}

Aggregation aggregation_from_name(const std::string& name) {
    if (name == "mean") return Aggregation::mean;
    if (name == "max") return Aggregation::max;
    if (name == "l1") return Aggregation::l1;
    if (name == "l2") return Aggregation::l2;
    throw_config_error("unknown aggregation '" + name + "'");
}

void TreeConfig::validate() const {
    if (num_hops < 1) throw_config_error("num_hops must be >= 1");
    if (static_cast<int>(k_per_hop.size()) != num_hops)
        throw_config_error("k_per_hop must list one value per hop");
    if (static_cast<int>(points_per_hop.size()) != num_hops)
        throw_config_error("points_per_hop must list one value per hop");
    for (int h = 0; h < num_hops; ++h) {
        if (points_per_hop[h] < 1) throw_config_error("points_per_hop entries must be >= 1");
        if (k_per_hop[h] < 2) throw_config_error("k_per_hop entries must be >= 2");
        if (k_per_hop[h] > points_per_hop[h])
            throw_config_error("k_per_hop may not exceed points_per_hop at the same hop");
        if (h > 0 && points_per_hop[h] > points_per_hop[h - 1])
            throw_config_error("points_per_hop must be nonincreasing");
    }
    if (!(energy_threshold > 0.0) || energy_threshold > 1.0)
        throw_config_error("energy_threshold must lie in (0, 1]");
    if (aggregations.empty()) throw_config_error("at least one aggregation is required");
    for (std::size_t i = 1; i < aggregations.size(); ++i) {
        if (static_cast<int>(aggregations[i]) <= static_cast<int>(aggregations[i - 1]))
            throw_config_error("aggregations must be unique and listed in order mean, max, l1, l2");
    }
}

double FeatureTree::leaf_energy_sum() const {
    double s = 0.0;
    for (const TreeNode& n : nodes)
        if (!n.is_internal) s += n.energy;
    return s;
}

std::size_t FeatureTree::filter_float_count() const {
    auto bank_floats = [](const SaabFilterBank& b) {
        return static_cast<std::size_t>(b.mean.size()) +
               static_cast<std::size_t>(b.ac_weights.size()) +
               static_cast<std::size_t>(b.eigenvalues.size());
    };
    std::size_t total = bank_floats(root_bank);
    for (const SaabFilterBank& b : banks) total += bank_floats(b);
    return total;
}

void FeatureTree::rebuild_leaf_order() {
    leaf_order.clear();
    for (const TreeNode& n : nodes) {
        if (n.is_internal) continue;
        if (config.drop_below_threshold && n.energy < config.energy_threshold) continue;
        leaf_order.push_back(n.node_id);
    }
}

namespace {

// Geometry of one resolution level of one cloud: the carrier points, the
// sampled centers, and each center's neighbors grouped by octant. Member
// indices point into `pool`, whose order matches the value vectors flowing
// through this level.
struct LevelLayout {
    std::vector<Vec3> pool;
    std::vector<std::uint32_t> centers;
    std::vector<std::uint32_t> members; // per center, per octant, concatenated
    std::vector<std::uint32_t> offsets; // centers.size() * 8 + 1 entries
};

struct CloudCascade {
    std::vector<LevelLayout> levels;
};

void fill_octant_groups(LevelLayout& layout, std::size_t k) {
    const std::size_t m = layout.centers.size();
    layout.offsets.assign(m * 8 + 1, 0);
    layout.members.clear();
    layout.members.reserve(m * (k - 1));
    std::span<const Vec3> pts(layout.pool);
    for (std::size_t ci = 0; ci < m; ++ci) {
        const NeighborSet ns = knn(pts, layout.centers[ci], k);
        const auto groups = octant_partition(pts, ns);
        for (int g = 0; g < 8; ++g) {
            for (std::uint32_t idx : groups[g]) layout.members.push_back(idx);
            layout.offsets[ci * 8 + g + 1] = static_cast<std::uint32_t>(layout.members.size());
        }
    }
}

// Mean-pool attributes over each center's octant groups. Empty groups leave
// their block at zero. attrs is |pool| x D; the result is |centers| x 8D.
Eigen::MatrixXd pool_rows(const LevelLayout& layout,
                          const Eigen::Ref<const Eigen::MatrixXd>& attrs) {
    const std::size_t m = layout.centers.size();
    const Eigen::Index d = attrs.cols();
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), 8 * d);
    for (std::size_t ci = 0; ci < m; ++ci) {
        for (int g = 0; g < 8; ++g) {
            const std::uint32_t lo = layout.offsets[ci * 8 + g];
            const std::uint32_t hi = layout.offsets[ci * 8 + g + 1];
            if (lo == hi) continue;
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
            for (std::uint32_t j = lo; j < hi; ++j) acc += attrs.row(layout.members[j]);
            rows.block(static_cast<Eigen::Index>(ci), g * d, 1, d) = acc / double(hi - lo);
        }
    }
    return rows;
}

Eigen::MatrixXd coords_matrix(std::span<const Vec3> pts) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = pts[i][0];
        m(static_cast<Eigen::Index>(i), 1) = pts[i][1];
        m(static_cast<Eigen::Index>(i), 2) = pts[i][2];
    }
    return m;
}

std::vector<Vec3> prepare_points(const PointCloud& cloud, const TreeConfig& cfg) {
    if (cloud.points.empty()) throw_invalid_input("empty point cloud");
    PointCloud base = cfg.normalize_input ? normalize(cloud) : cloud;
    if (!cfg.normalize_input) {
        for (const Vec3& p : base.points)
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
                throw_invalid_input("point cloud contains non-finite coordinates");
    }
    return std::move(base.points);
}

// Per-hop targets are clamped to what the cloud actually provides. Padding a
// sparse cloud with duplicate points is not an option: duplicates collapse
// the k nearest neighbors onto a handful of distinct positions, which shrinks
// every receptive field and shifts the coefficient distribution the
// classifier was fitted on far more than the sparsity itself does.
CloudCascade make_cascade(std::vector<Vec3> prepared, const TreeConfig& cfg) {
    CloudCascade cc;
    cc.levels.resize(cfg.num_hops);
    for (int h = 0; h < cfg.num_hops; ++h) {
        LevelLayout& L = cc.levels[h];
        L.pool = h == 0 ? std::move(prepared) : std::vector<Vec3>();
        if (h > 0) {
            const LevelLayout& prev = cc.levels[h - 1];
            L.pool.reserve(prev.centers.size());
            for (std::uint32_t ci : prev.centers) L.pool.push_back(prev.pool[ci]);
        }
        L.centers = farthest_point_sample(
            std::span<const Vec3>(L.pool),
            std::min(L.pool.size(), static_cast<std::size_t>(cfg.points_per_hop[h])));
        fill_octant_groups(L,
                           std::min(L.pool.size(), static_cast<std::size_t>(cfg.k_per_hop[h])));
    }
    return cc;
}

struct BankFit {
    SaabFilterBank bank;
    Eigen::VectorXd energies;
    std::vector<CoefficientMatrix> coeffs; // one per cloud, |centers_level| x 8D
};

// Fit one bank at `level` from per-cloud attribute matrices aligned with the
// level's pool, then run every cloud through it. Returns nothing when the
// pooled rows carry no variance at all; the caller turns that channel into a
// leaf so its energy is not lost.
std::optional<BankFit> fit_bank(const std::vector<CloudCascade>& cascades, int level,
                                const std::vector<Eigen::MatrixXd>& attrs, double parent_energy) {
    const int n_clouds = static_cast<int>(cascades.size());
    const Eigen::Index width = 8 * attrs[0].cols();
    std::vector<Eigen::MatrixXd> rows(n_clouds);
    std::vector<SaabAccumulator> partials(n_clouds, SaabAccumulator(static_cast<int>(width)));
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n_clouds; ++c) {
        rows[c] = pool_rows(cascades[c].levels[level], attrs[c]);
        partials[c].accumulate(rows[c]);
    }
    SaabAccumulator total(static_cast<int>(width));
    for (int c = 0; c < n_clouds; ++c) total.merge(partials[c]); // fixed merge order
    partials.clear();

    BankFit out;
    out.bank = total.finalize();
    if (out.bank.eigenvalues.sum() <= 0.0) return std::nullopt;
    out.energies = channel_energies(out.bank, parent_energy);
    out.coeffs.resize(n_clouds);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n_clouds; ++c) {
        out.coeffs[c] = apply_saab(out.bank, rows[c]);
        rows[c].resize(0, 0);
    }
    return out;
}

struct FitState {
    const TreeConfig* cfg = nullptr;
    const std::vector<CloudCascade>* cascades = nullptr;
    FeatureTree* tree = nullptr;
    std::vector<int> nodes_at_hop;
    std::vector<int> internal_at_hop;
};

// Create the child nodes of a fitted bank at hop `child_hop` and descend into
// the ones that stay above the energy threshold. Nodes are appended in
// discovery order, which makes the node table a pre-order walk of the tree.
void expand_bank(FitState& st, std::int32_t parent_id, int child_hop, const BankFit& fit) {
    const int n_channels = static_cast<int>(fit.energies.size());
    const int n_clouds = static_cast<int>(st.cascades->size());
    for (int ch = 0; ch < n_channels; ++ch) {
        const std::uint32_t id = static_cast<std::uint32_t>(st.tree->nodes.size());
        TreeNode node;
        node.node_id = id;
        node.parent_id = parent_id;
        node.hop_index = static_cast<std::uint16_t>(child_hop);
        node.channel_index = static_cast<std::uint16_t>(ch);
        node.energy = fit.energies[ch];
        st.tree->nodes.push_back(node);
        st.nodes_at_hop[child_hop] += 1;

        const bool expandable =
            child_hop + 1 < st.cfg->num_hops && node.energy >= st.cfg->energy_threshold;
        if (!expandable) continue;

        std::vector<Eigen::MatrixXd> child_attrs(n_clouds);
        for (int c = 0; c < n_clouds; ++c) child_attrs[c] = fit.coeffs[c].col(ch);
        std::optional<BankFit> sub =
            fit_bank(*st.cascades, child_hop + 1, child_attrs, node.energy);
        if (!sub) continue; // zero-variance channel, keep as leaf
        child_attrs.clear();

        st.tree->nodes[id].is_internal = true;
        st.tree->nodes[id].bank_index = static_cast<std::int32_t>(st.tree->banks.size());
        st.tree->banks.push_back(sub->bank);
        st.internal_at_hop[child_hop] += 1;
        expand_bank(st, static_cast<std::int32_t>(id), child_hop + 1, *sub);
    }
}

std::vector<std::int32_t> leaf_positions(const FeatureTree& tree) {
    std::vector<std::int32_t> pos(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < tree.leaf_order.size(); ++i)
        pos[tree.leaf_order[i]] = static_cast<std::int32_t>(i);
    return pos;
}

double aggregate(const Eigen::Ref<const Eigen::VectorXd>& v, Aggregation a) {
    switch (a) {
        case Aggregation::mean: return v.mean();
        case Aggregation::max: return v.maxCoeff();
        case Aggregation::l1: return v.cwiseAbs().mean();
        case Aggregation::l2: return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
    }
    return 0.0;
}

} // namespace

Eigen::MatrixXd build_attributes(std::span<const Vec3> points,
                                 std::span<const std::uint32_t> centers, std::size_t k,
                                 const Eigen::Ref<const Eigen::MatrixXd>& point_attrs) {
    if (points.empty()) throw_invalid_input("build_attributes: empty point set");
    if (k < 2 || k > points.size())
        throw_invalid_input("build_attributes: k must lie in [2, point count]");
    if (point_attrs.rows() != static_cast<Eigen::Index>(points.size()))
        throw_invalid_input("build_attributes: one attribute row per point required");
    for (std::uint32_t c : centers)
        if (c >= points.size()) throw_invalid_input("build_attributes: center index out of range");

    LevelLayout layout;
    layout.pool.assign(points.begin(), points.end());
    layout.centers.assign(centers.begin(), centers.end());
    fill_octant_groups(layout, k);
    return pool_rows(layout, point_attrs);
}

FeatureTree fit_tree(std::span<const PointCloud> clouds, const TreeConfig& config) {
    config.validate();
    if (clouds.size() < 2) throw_insufficient_data("fit_tree needs at least two clouds");

    const int n_clouds = static_cast<int>(clouds.size());
    std::vector<CloudCascade> cascades(n_clouds);
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < n_clouds; ++c)
        cascades[c] = make_cascade(prepare_points(clouds[c], config), config);

    FeatureTree tree;
    tree.config = config;

    std::vector<Eigen::MatrixXd> coords(n_clouds);
    for (int c = 0; c < n_clouds; ++c) coords[c] = coords_matrix(cascades[c].levels[0].pool);
    std::optional<BankFit> root = fit_bank(cascades, 0, coords, 1.0);
    coords.clear();
    if (!root) throw_insufficient_data("training attributes carry no variance");
    tree.root_bank = root->bank;

    FitState st;
    st.cfg = &config;
    st.cascades = &cascades;
    st.tree = &tree;
    st.nodes_at_hop.assign(config.num_hops, 0);
    st.internal_at_hop.assign(config.num_hops, 0);
    expand_bank(st, -1, 0, *root);

    for (int h = 0; h + 1 < config.num_hops; ++h) {
        if (st.nodes_at_hop[h] > 0 && st.internal_at_hop[h] == 0) {
            log::warn("cascade stopped at hop %d: no channel reached the energy threshold", h);
            break;
        }
    }

    tree.rebuild_leaf_order();
    if (tree.leaf_order.empty())
        throw_config_error("no leaves survive the drop-below-threshold filter");
    tree.fitted = true;
    return tree;
}

GlobalFeature transform(const FeatureTree& tree, const PointCloud& cloud) {
    if (!tree.fitted) throw_invalid_state("transform called on an unfitted tree");
    const TreeConfig& cfg = tree.config;
    CloudCascade cc = make_cascade(prepare_points(cloud, cfg), cfg);

    // Child lists per node, in node-id order; ids are assigned in pre-order,
    // so iterating a child list visits channels in ascending order.
    std::vector<std::vector<std::uint32_t>> children(tree.nodes.size());
    std::vector<std::uint32_t> top;
    for (const TreeNode& n : tree.nodes) {
        if (n.parent_id < 0)
            top.push_back(n.node_id);
        else
            children[static_cast<std::size_t>(n.parent_id)].push_back(n.node_id);
    }
    const std::vector<std::int32_t> pos = leaf_positions(tree);
    const std::size_t n_aggs = cfg.aggregations.size();

    GlobalFeature out;
    out.values.assign(tree.feature_dim(), 0.0);

    auto visit = [&](auto&& self, const TreeNode& node,
                     const Eigen::Ref<const Eigen::VectorXd>& values) -> void {
        if (!node.is_internal) {
            const std::int32_t p = pos[node.node_id];
            if (p < 0) return; // dropped leaf
            for (std::size_t a = 0; a < n_aggs; ++a)
                out.values[static_cast<std::size_t>(p) * n_aggs + a] =
                    aggregate(values, cfg.aggregations[a]);
            return;
        }
        const int level = node.hop_index + 1;
        const Eigen::MatrixXd rows = pool_rows(cc.levels[level], values);
        const CoefficientMatrix coeffs = apply_saab(tree.banks[node.bank_index], rows);
        for (std::uint32_t child_id : children[node.node_id])
            self(self, tree.nodes[child_id], coeffs.col(tree.nodes[child_id].channel_index));
    };

    const Eigen::MatrixXd rows0 = pool_rows(cc.levels[0], coords_matrix(cc.levels[0].pool));
    const CoefficientMatrix coeffs0 = apply_saab(tree.root_bank, rows0);
    for (std::uint32_t id : top)
        visit(visit, tree.nodes[id], coeffs0.col(tree.nodes[id].channel_index));

    out.provenance = feature_layout(tree);
    return out;
}

std::vector<FeatureProvenance> feature_layout(const FeatureTree& tree) {
    std::vector<FeatureProvenance> layout;
    layout.reserve(tree.feature_dim());
    for (std::uint32_t id : tree.leaf_order)
        for (Aggregation a : tree.config.aggregations) layout.push_back({id, a});
    return layout;
}

Eigen::MatrixXd hop0_attributes(const TreeConfig& config, const PointCloud& cloud) {
    config.validate();
    std::vector<Vec3> prepared = prepare_points(cloud, config);
    LevelLayout L;
    L.pool = std::move(prepared);
    L.centers = farthest_point_sample(
        std::span<const Vec3>(L.pool),
        std::min(L.pool.size(), static_cast<std::size_t>(config.points_per_hop[0])));
    fill_octant_groups(L,
                       std::min(L.pool.size(), static_cast<std::size_t>(config.k_per_hop[0])));
    return pool_rows(L, coords_matrix(L.pool));
}

} // namespace ph2
