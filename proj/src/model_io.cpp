#include "ph2/model_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ph2/error.hpp"

namespace ph2 {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'P', 'H', '2', 0x01};
constexpr std::uint16_t kEndianMarker = 0xFEFF;
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kFlagTree = 1u << 0;
constexpr std::uint32_t kFlagRanking = 1u << 1;
constexpr std::uint32_t kFlagLlsr = 1u << 2;
constexpr std::uint32_t kFlagEnsemble = 1u << 3;
constexpr std::size_t kHeaderSize = 4 + 2 + 2 + 4 + 8;

struct Writer {
    std::vector<std::uint8_t>& buf;

    void u8(std::uint8_t v) { buf.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void vec_i32(const std::vector<int>& v) {
        u64(v.size());
        for (int x : v) i32(x);
    }
    void vec_d(const Eigen::Ref<const Eigen::VectorXd>& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
    }
    void mat_d(const Eigen::Ref<const Eigen::MatrixXd>& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
    void str(const std::string& s) {
        u64(s.size());
        buf.insert(buf.end(), s.begin(), s.end());
    }
};

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw_corrupt_model("container payload truncated");
    }
    std::uint8_t u8() {
        need(1);
        return *p++;
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(p[i]) << (8 * i);
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint64_t count(std::uint64_t max_reasonable) {
        const std::uint64_t n = u64();
        if (n > max_reasonable) throw_corrupt_model("implausible element count in container");
        return n;
    }
    std::vector<int> vec_i32() {
        const std::uint64_t n = count(1u << 20);
        std::vector<int> v(n);
        for (auto& x : v) x = i32();
        return v;
    }
    Eigen::VectorXd vec_d() {
        const std::uint64_t n = count(1u << 28);
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
        return v;
    }
    Eigen::MatrixXd mat_d() {
        const std::uint64_t rows = count(1u << 28);
        const std::uint64_t cols = count(1u << 28);
        if (rows != 0 && cols > (1u << 28) / rows)
            throw_corrupt_model("implausible matrix shape in container");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::uint64_t r = 0; r < rows; ++r)
            for (std::uint64_t c = 0; c < cols; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f64();
        return m;
    }
    std::string str() {
        const std::uint64_t n = count(1u << 20);
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

void write_bank(Writer& w, const SaabFilterBank& b) {
    w.i32(b.input_dim);
    w.vec_d(b.mean);
    w.mat_d(b.ac_weights);
    w.vec_d(b.eigenvalues);
}

SaabFilterBank read_bank(Reader& r) {
    SaabFilterBank b;
    b.input_dim = r.i32();
    b.mean = r.vec_d();
    b.ac_weights = r.mat_d();
    b.eigenvalues = r.vec_d();
    if (b.input_dim < 2 || b.mean.size() != b.input_dim ||
        b.ac_weights.rows() != b.input_dim - 1 || b.ac_weights.cols() != b.input_dim ||
        b.eigenvalues.size() != b.input_dim)
        throw_corrupt_model("inconsistent filter bank dimensions");
    return b;
}

void write_llsr(Writer& w, const LLSRModel& m) {
    w.i32(m.feature_dim);
    w.i32(m.num_classes);
    w.u8(m.standardize ? 1 : 0);
    w.vec_d(m.feature_mean);
    w.vec_d(m.feature_std);
    w.mat_d(m.weights);
}

LLSRModel read_llsr(Reader& r) {
    LLSRModel m;
    m.feature_dim = r.i32();
    m.num_classes = r.i32();
    m.standardize = r.u8() != 0;
    m.feature_mean = r.vec_d();
    m.feature_std = r.vec_d();
    m.weights = r.mat_d();
    if (m.feature_dim < 1 || m.num_classes < 1 || m.feature_mean.size() != m.feature_dim ||
        m.feature_std.size() != m.feature_dim || m.weights.rows() != m.feature_dim + 1 ||
        m.weights.cols() != m.num_classes)
        throw_corrupt_model("inconsistent classifier dimensions");
    return m;
}

void write_payload(Writer& w, const ModelContainer& c) {
    const TreeConfig& cfg = c.tree.config;
    w.i32(cfg.num_hops);
    w.vec_i32(cfg.k_per_hop);
    w.vec_i32(cfg.points_per_hop);
    w.f64(cfg.energy_threshold);
    w.u64(cfg.aggregations.size());
    for (Aggregation a : cfg.aggregations) w.u8(static_cast<std::uint8_t>(a));
    w.u8(cfg.normalize_input ? 1 : 0);
    w.u8(cfg.drop_below_threshold ? 1 : 0);

    write_bank(w, c.tree.root_bank);
    w.u64(c.tree.nodes.size());
    for (const TreeNode& n : c.tree.nodes) {
        w.u32(n.node_id);
        w.i32(n.parent_id);
        w.u16(n.hop_index);
        w.u16(n.channel_index);
        w.f64(n.energy);
        w.u8(n.is_internal ? 1 : 0);
        w.i32(n.bank_index);
    }
    w.u64(c.tree.banks.size());
    for (const SaabFilterBank& b : c.tree.banks) write_bank(w, b);

    w.u64(c.class_names.size());
    for (const std::string& s : c.class_names) w.str(s);

    if (c.ranking) {
        w.vec_d(c.ranking->set.cross_entropy);
        w.vec_d(c.ranking->set.energy);
        w.u8(c.ranking->mode == RankMode::cross_entropy ? 0 : 1);
        w.u64(c.ranking->m);
    }
    if (c.llsr) write_llsr(w, *c.llsr);
    if (c.ensemble) {
        w.u8(static_cast<std::uint8_t>(c.ensemble->axis));
        w.u64(c.ensemble->angles.size());
        for (double a : c.ensemble->angles) w.f64(a);
        for (const LLSRModel& m : c.ensemble->stage1) write_llsr(w, m);
        write_llsr(w, c.ensemble->stage2);
    }
}

ModelContainer read_payload(Reader& r, std::uint32_t flags) {
    ModelContainer c;
    TreeConfig cfg;
    cfg.num_hops = r.i32();
    cfg.k_per_hop = r.vec_i32();
    cfg.points_per_hop = r.vec_i32();
    cfg.energy_threshold = r.f64();
    const std::uint64_t n_aggs = r.count(4);
    cfg.aggregations.clear();
    for (std::uint64_t i = 0; i < n_aggs; ++i) {
        const std::uint8_t a = r.u8();
        if (a > 3) throw_corrupt_model("unknown aggregation id in container");
        cfg.aggregations.push_back(static_cast<Aggregation>(a));
    }
    cfg.normalize_input = r.u8() != 0;
    cfg.drop_below_threshold = r.u8() != 0;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw_corrupt_model(std::string("stored config invalid: ") + e.what());
    }
    c.tree.config = cfg;

    c.tree.root_bank = read_bank(r);
    const std::uint64_t n_nodes = r.count(1u << 24);
    c.tree.nodes.resize(n_nodes);
    for (std::uint64_t i = 0; i < n_nodes; ++i) {
        TreeNode& n = c.tree.nodes[i];
        n.node_id = r.u32();
        n.parent_id = r.i32();
        n.hop_index = r.u16();
        n.channel_index = r.u16();
        n.energy = r.f64();
        n.is_internal = r.u8() != 0;
        n.bank_index = r.i32();
        if (n.node_id != i) throw_corrupt_model("node table out of order");
        if (n.parent_id < -1 || n.parent_id >= static_cast<std::int32_t>(i))
            throw_corrupt_model("node parent not before child");
        if (n.hop_index >= cfg.num_hops) throw_corrupt_model("node hop out of range");
    }
    const std::uint64_t n_banks = r.count(1u << 24);
    c.tree.banks.resize(n_banks);
    for (std::uint64_t i = 0; i < n_banks; ++i) c.tree.banks[i] = read_bank(r);
    for (const TreeNode& n : c.tree.nodes) {
        if (n.is_internal &&
            (n.bank_index < 0 || static_cast<std::uint64_t>(n.bank_index) >= n_banks))
            throw_corrupt_model("internal node without a stored bank");
    }
    c.tree.fitted = true;
    c.tree.rebuild_leaf_order();

    const std::uint64_t n_classes = r.count(1u << 20);
    for (std::uint64_t i = 0; i < n_classes; ++i) c.class_names.push_back(r.str());

    if (flags & kFlagRanking) {
        RankedSelection sel;
        sel.set.cross_entropy = r.vec_d();
        sel.set.energy = r.vec_d();
        sel.mode = r.u8() == 0 ? RankMode::cross_entropy : RankMode::energy;
        sel.m = r.u64();
        if (sel.set.energy.size() != sel.set.cross_entropy.size() ||
            sel.m > static_cast<std::uint64_t>(sel.set.cross_entropy.size()))
            throw_corrupt_model("inconsistent ranking section");
        rebuild_orders(sel.set);
        c.ranking = std::move(sel);
    }
    if (flags & kFlagLlsr) c.llsr = read_llsr(r);
    if (flags & kFlagEnsemble) {
        EnsembleModel e;
        const std::uint8_t axis = r.u8();
        if (axis > 2) throw_corrupt_model("unknown rotation axis in container");
        e.axis = static_cast<Axis>(axis);
        const std::uint64_t n_rot = r.count(4096);
        if (n_rot == 0) throw_corrupt_model("ensemble without rotations");
        e.angles.resize(n_rot);
        for (auto& a : e.angles) a = r.f64();
        e.stage1.resize(n_rot);
        for (auto& m : e.stage1) m = read_llsr(r);
        e.stage2 = read_llsr(r);
        c.ensemble = std::move(e);
    }
    return c;
}

std::uint32_t section_flags(const ModelContainer& c) {
    std::uint32_t flags = kFlagTree;
    if (c.ranking) flags |= kFlagRanking;
    if (c.llsr) flags |= kFlagLlsr;
    if (c.ensemble) flags |= kFlagEnsemble;
    return flags;
}

} // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t v = i;
            for (int b = 0; b < 8; ++b) v = (v >> 1) ^ (0xEDB88320u & (~(v & 1u) + 1u));
            t[i] = v;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = (crc >> 8) ^ table[(crc ^ data[i]) & 0xFFu];
    return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> serialize_model(const ModelContainer& c) {
    if (!c.tree.fitted) throw_invalid_state("serialize_model: tree is not fitted");
    std::vector<std::uint8_t> bytes;
    Writer w{bytes};
    for (std::uint8_t b : kMagic) w.u8(b);
    w.u16(kEndianMarker);
    w.u16(kVersion);
    w.u32(section_flags(c));
    w.u64(0); // payload size, patched below
    write_payload(w, c);
    const std::uint64_t payload = bytes.size() - kHeaderSize;
    for (int i = 0; i < 8; ++i)
        bytes[kHeaderSize - 8 + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(payload >> (8 * i));
    const std::uint32_t crc = crc32(bytes.data(), bytes.size());
    w.u32(crc);
    return bytes;
}

ModelContainer deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderSize + 4) throw_corrupt_model("container shorter than its header");
    Reader header{bytes.data(), bytes.data() + bytes.size()};
    for (std::uint8_t b : kMagic)
        if (header.u8() != b) throw_corrupt_model("bad magic, not a model container");
    if (header.u16() != kEndianMarker)
        throw_corrupt_model("endianness marker mismatch");
    const std::uint16_t version = header.u16();
    if (version != kVersion)
        throw_corrupt_model("unsupported container version " + std::to_string(version));
    const std::uint32_t flags = header.u32();
    if (!(flags & kFlagTree)) throw_corrupt_model("container lacks the tree section");
    const std::uint64_t payload = header.u64();
    if (bytes.size() != kHeaderSize + payload + 4)
        throw_corrupt_model("container size disagrees with its header");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)])
                 << (8 * i);
        return v;
    }();
    const std::uint32_t actual_crc = crc32(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc) throw_corrupt_model("checksum mismatch, container corrupted");

    Reader r{bytes.data() + kHeaderSize, bytes.data() + bytes.size() - 4};
    ModelContainer c = read_payload(r, flags);
    if (r.p != r.end) throw_corrupt_model("trailing bytes after payload");
    return c;
}

void save_model(const ModelContainer& c, const std::string& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(c);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw_io_error("cannot open '" + path + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw_io_error("write failure on '" + path + "'");
    }

    std::ostringstream man;
    man << "format = ph2-model\n";
    man << "version = " << kVersion << "\n";
    man << "sections = tree";
    if (c.ranking) man << ",ranking";
    if (c.llsr) man << ",llsr";
    if (c.ensemble) man << ",ensemble";
    man << "\n";
    man << "num_hops = " << c.tree.config.num_hops << "\n";
    char thr[64];
    std::snprintf(thr, sizeof thr, "%.17g", c.tree.config.energy_threshold);
    man << "energy_threshold = " << thr << "\n";
    man << "nodes = " << c.tree.nodes.size() << "\n";
    man << "leaf_count = " << c.tree.leaf_count() << "\n";
    man << "feature_dim = " << c.tree.feature_dim() << "\n";
    man << "filter_floats = " << c.tree.filter_float_count() << "\n";
    man << "classes = " << c.class_names.size() << "\n";
    man << "payload_bytes = " << (bytes.size() - kHeaderSize - 4) << "\n";
    char crcbuf[16];
    std::snprintf(crcbuf, sizeof crcbuf, "0x%08x", crc32(bytes.data(), bytes.size() - 4));
    man << "crc32 = " << crcbuf << "\n";

    std::ofstream mout(path + ".manifest", std::ios::trunc);
    if (!mout) throw_io_error("cannot open '" + path + ".manifest' for writing");
    mout << man.str();
    if (!mout) throw_io_error("write failure on '" + path + ".manifest'");
}

ModelContainer load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io_error("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw_io_error("read failure on '" + path + "'");
    return deserialize_model(bytes);
}

} // namespace ph2
