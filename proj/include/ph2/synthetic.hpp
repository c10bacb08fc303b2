#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ph2/dataset_io.hpp"
#include "ph2/point_cloud.hpp"

namespace ph2 {

// Four synthetic shape classes used by tests and the bundled demo data:
// surface samples from a sphere, a cube, a torus, and two orthogonal
// intersecting rectangles ("cross"). Each cloud gets an independent random
// heading about z plus isotropic coordinate noise, so classifying them
// actually requires shape information rather than orientation cues.
inline const std::vector<std::string>& synthetic_class_names() {
    static const std::vector<std::string> names{"cross", "cube", "sphere", "torus"};
    return names;
}

// One cloud of class `label` (index into synthetic_class_names()).
// Deterministic in (seed, label, index); the cloud's label field is set.
PointCloud synthetic_cloud(int label, std::size_t points, double noise_sigma,
                           std::uint64_t seed, std::uint64_t index);

// per_class clouds per class, ordered class-major then index.
Dataset synthetic_dataset(std::size_t per_class, std::size_t points, double noise_sigma,
                          std::uint64_t seed, const std::string& split);

} // namespace ph2
