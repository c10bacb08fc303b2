#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ph2/classifier.hpp"
#include "ph2/feature_tree.hpp"
#include "ph2/ranking.hpp"

namespace ph2 {

// Feature selection baked into a model: scores for every column plus the
// chosen ordering and how many columns survive.
struct RankedSelection {
    RankedFeatureSet set;
    RankMode mode = RankMode::cross_entropy;
    std::uint64_t m = 0;

    std::vector<std::uint32_t> selected() const { return select_top(set, mode, m); }
};

struct ModelContainer {
    FeatureTree tree;
    std::vector<std::string> class_names;
    std::optional<RankedSelection> ranking;
    std::optional<LLSRModel> llsr;
    std::optional<EnsembleModel> ensemble;
};

// Binary image of a container: fixed header (magic "PH2\x01", endianness
// marker, format version, section flags, payload size), little-endian
// payload with all floats as 64-bit bit patterns, and a trailing CRC-32.
// Encoding is a pure function of the container, so identical models produce
// identical bytes.
std::vector<std::uint8_t> serialize_model(const ModelContainer& container);
ModelContainer deserialize_model(const std::vector<std::uint8_t>& bytes);

// File round trip. save_model also writes a human-readable "key = value"
// sidecar manifest at path + ".manifest" (sizes, checksum; no timestamps).
void save_model(const ModelContainer& container, const std::string& path);
ModelContainer load_model(const std::string& path);

// IEEE CRC-32 (reflected 0xEDB88320), used for the container checksum.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

} // namespace ph2
