#include "lad/sim/world.hpp"

#include <cmath>
#include <stdexcept>

namespace lad::sim {

int feature_dim(int num_classes) { return 5 + num_classes; }

Scene generate_scene(const WorldConfig& config, const rng::Stream& stream, std::int64_t id) {
    if (config.width < 32.0 || config.height < 32.0)
        throw std::invalid_argument("generate_scene: canvas must be at least 32x32");
    if (config.num_classes < 1) throw std::invalid_argument("generate_scene: num_classes must be >= 1");
    if (config.max_objects < 1) throw std::invalid_argument("generate_scene: max_objects must be >= 1");
    if (!(config.min_size > 0.0) || config.min_size > config.max_size ||
        config.min_size > std::min(config.width, config.height))
        throw std::invalid_argument("generate_scene: impossible size_range for this canvas");

    Scene scene;
    scene.id = id;
    scene.width = config.width;
    scene.height = config.height;
    scene.noise_seed = stream.bits(1);

    const int count = 1 + static_cast<int>(stream.uniform_int(0, config.max_objects));
    scene.objects.reserve(count);
    for (int o = 0; o < count; ++o) {
        const std::uint64_t base = 16 + static_cast<std::uint64_t>(o) * 8;
        LabeledObject obj;
        obj.class_id = static_cast<int>(stream.uniform_int(base, config.num_classes));
        const double w = std::min(stream.log_uniform(base + 1, config.min_size, config.max_size),
                                  config.width);
        const double h = std::min(stream.log_uniform(base + 2, config.min_size, config.max_size),
                                  config.height);
        const double cx = stream.uniform(base + 3, 0.5 * w, config.width - 0.5 * w);
        const double cy = stream.uniform(base + 4, 0.5 * h, config.height - 0.5 * h);
        obj.box = Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
        scene.objects.push_back(obj);
    }
    return scene;
}

FeatureMatrix extract_features(const Scene& scene, const AnchorGrid& grid,
                               const WorldConfig& config) {
    const int num_classes = config.num_classes;
    FeatureMatrix feats;
    feats.num_anchors = grid.size();
    feats.dim = feature_dim(num_classes);
    feats.data.assign(static_cast<std::size_t>(feats.num_anchors) * feats.dim, 0.0);

    const rng::Stream noise(scene.noise_seed, "noise");
    for (const Anchor& a : grid.anchors) {
        double* f = feats.row(a.id);
        // nearest object by center distance, ties to the lower index
        int nearest = -1;
        double best = 0.0;
        for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
            const Box& b = scene.objects[oi].box;
            const double dx = b.cx() - a.box.cx();
            const double dy = b.cy() - a.box.cy();
            const double d2 = dx * dx + dy * dy;
            if (nearest < 0 || d2 < best) {
                nearest = static_cast<int>(oi);
                best = d2;
            }
        }
        if (nearest >= 0) {
            const LabeledObject& obj = scene.objects[nearest];
            const double scale = a.box.width();
            f[0] = (obj.box.cx() - a.box.cx()) / scale;
            f[1] = (obj.box.cy() - a.box.cy()) / scale;
            f[2] = std::log(obj.box.width() / a.box.width());
            f[3] = std::log(obj.box.height() / a.box.height());
            f[4] = iou(a.box, obj.box);
            f[5 + obj.class_id] = 1.0;
        }
        if (config.noise_sigma > 0.0) {
            const std::uint64_t base = static_cast<std::uint64_t>(a.id) * num_classes;
            for (int c = 0; c < num_classes; ++c)
                f[5 + c] += config.noise_sigma * noise.normal(base + c);
        }
    }
    return feats;
}

}  // namespace lad::sim
