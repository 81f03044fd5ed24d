#pragma once

#include <cstdint>
#include <vector>

#include "lad/assign.hpp"
#include "lad/geometry.hpp"
#include "lad/rng.hpp"

namespace lad::sim {

struct WorldConfig {
    double width = 64.0;
    double height = 64.0;
    int num_classes = 3;
    int max_objects = 3;
    double min_size = 8.0;
    double max_size = 32.0;
    double noise_sigma = 0.25;
};

struct Scene {
    std::int64_t id = 0;
    double width = 0.0;
    double height = 0.0;
    std::vector<LabeledObject> objects;
    std::uint64_t noise_seed = 0;
};

// Per-anchor feature rows, row-major [num_anchors x dim]. Deterministic in
// (scene, grid); the class-evidence noise comes from the scene's own seed.
struct FeatureMatrix {
    int num_anchors = 0;
    int dim = 0;
    std::vector<double> data;

    const double* row(int anchor) const { return data.data() + static_cast<std::size_t>(anchor) * dim; }
    double* row(int anchor) { return data.data() + static_cast<std::size_t>(anchor) * dim; }
};

// 5 geometric channels + num_classes evidence channels.
int feature_dim(int num_classes);

// Uniform centers, log-uniform sizes, uniform classes; every object lies
// inside the canvas. `stream` should already be forked per scene.
Scene generate_scene(const WorldConfig& config, const rng::Stream& stream, std::int64_t id);

// Geometric channels (offset to nearest object center, log size ratios, IoU
// with the nearest object) plus noisy one-hot class evidence for the
// nearest object's class. Classification has to disentangle the noise;
// geometry is exact, so label quality decides what is learnable.
FeatureMatrix extract_features(const Scene& scene, const AnchorGrid& grid,
                               const WorldConfig& config);

}  // namespace lad::sim
