#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lad/assign.hpp"
#include "lad/cop.hpp"
#include "lad/geometry.hpp"
#include "lad/rng.hpp"
#include "lad/sim/world.hpp"

namespace lad::sim {

enum class FusionMode { None, Iop, Cop };

// y = Wx + b with W stored row-major [out x in].
struct LinearHead {
    int out = 0;
    int in = 0;
    std::vector<double> w;
    std::vector<double> b;

    void resize(int out_dim, int in_dim);
    void apply(const double* x, double* y) const;
};

// Linear detector heads over engineered per-anchor features. The
// objectness head has 9 outputs under COP fusion, 1 under IOP, none
// otherwise; the IoU head is always trained and optionally used at
// inference.
struct ModelParams {
    int feature_dim = 0;
    int num_classes = 0;
    FusionMode fusion = FusionMode::None;

    LinearHead cls;      // num_classes x D
    LinearHead box;      // 4 x D
    LinearHead obj;      // 9 or 1 x D (empty when fusion == None)
    LinearHead iou_head; // 1 x D

    bool shape_compatible(const ModelParams& other) const;
};

ModelParams init_params(int feature_dim, int num_classes, FusionMode fusion,
                        const rng::Stream& stream);
ModelParams zeros_like(const ModelParams& params);

// p += alpha * g, elementwise over every head.
void axpy(double alpha, const ModelParams& g, ModelParams& p);

std::vector<double> flatten(const ModelParams& params);
void unflatten(std::span<const double> values, ModelParams& params);

// Box delta clamp: |dx,dy,dw,dh| <= 4 before decoding.
inline constexpr double kDeltaClamp = 4.0;

// Center offsets scale with the level stride, sizes decode via exp.
Box decode_box(const Anchor& anchor, double stride, const std::array<double, 4>& delta);

struct ForwardOutput {
    std::vector<Prediction> preds;              // raw probs + decoded boxes
    std::vector<std::array<double, 4>> deltas_raw;  // pre-clamp, for the clamp mask
    std::vector<std::array<double, 4>> deltas;      // clamped, as decoded
    ObjectnessField objectness;                 // COP mode
    std::vector<double> obj1;                   // IOP mode
    std::vector<double> iou_pred;               // post-sigmoid
    std::vector<ProbVector> scored;             // fusion applied; equals raw probs when None
};

ForwardOutput forward(const ModelParams& params, const FeatureMatrix& features,
                      const AnchorGrid& grid);

// Per-anchor gradient slots the loss assembly fills before folding into
// parameter gradients; sized like the forward outputs.
struct AnchorGrads {
    std::vector<std::vector<double>> class_logits;
    std::vector<std::array<double, 9>> obj_logits;  // COP
    std::vector<double> obj1_logits;                // IOP
    std::vector<std::array<double, 4>> deltas;
    std::vector<double> iou_logits;
    std::vector<std::array<double, 4>> boxes;  // dL/d(decoded corner coords)

    void init(const ModelParams& params, int num_anchors);
};

// Chain dL/d(box corners) through decoding and the delta clamp, then fold
// every per-anchor slot into parameter gradients (grads += J^T * slots).
void fold_grads(const ModelParams& params, const FeatureMatrix& features, const AnchorGrid& grid,
                const ForwardOutput& fwd, AnchorGrads& slots, ModelParams& grads);

}  // namespace lad::sim
