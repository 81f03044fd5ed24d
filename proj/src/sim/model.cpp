#include "lad/sim/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lad::sim {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int obj_outputs(FusionMode mode) {
    switch (mode) {
        case FusionMode::Cop: return 9;
        case FusionMode::Iop: return 1;
        default: return 0;
    }
}

}  // namespace

void LinearHead::resize(int out_dim, int in_dim) {
    out = out_dim;
    in = in_dim;
    w.assign(static_cast<std::size_t>(out) * in, 0.0);
    b.assign(out, 0.0);
}

void LinearHead::apply(const double* x, double* y) const {
    for (int r = 0; r < out; ++r) {
        double acc = b[r];
        const double* wr = w.data() + static_cast<std::size_t>(r) * in;
        for (int d = 0; d < in; ++d) acc += wr[d] * x[d];
        y[r] = acc;
    }
}

bool ModelParams::shape_compatible(const ModelParams& other) const {
    return feature_dim == other.feature_dim && num_classes == other.num_classes &&
           fusion == other.fusion;
}

ModelParams init_params(int feature_dim, int num_classes, FusionMode fusion,
                        const rng::Stream& stream) {
    ModelParams p;
    p.feature_dim = feature_dim;
    p.num_classes = num_classes;
    p.fusion = fusion;
    p.cls.resize(num_classes, feature_dim);
    p.box.resize(4, feature_dim);
    p.obj.resize(obj_outputs(fusion), feature_dim);
    p.iou_head.resize(1, feature_dim);

    std::uint64_t ctr = 0;
    auto fill = [&](std::vector<double>& v) {
        for (double& x : v) x = stream.uniform(ctr++, -0.01, 0.01);
    };
    fill(p.cls.w);
    fill(p.cls.b);
    fill(p.box.w);
    fill(p.box.b);
    fill(p.obj.w);
    fill(p.obj.b);
    fill(p.iou_head.w);
    fill(p.iou_head.b);
    return p;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z;
    z.feature_dim = params.feature_dim;
    z.num_classes = params.num_classes;
    z.fusion = params.fusion;
    z.cls.resize(params.cls.out, params.cls.in);
    z.box.resize(params.box.out, params.box.in);
    z.obj.resize(params.obj.out, params.obj.in);
    z.iou_head.resize(params.iou_head.out, params.iou_head.in);
    return z;
}

void axpy(double alpha, const ModelParams& g, ModelParams& p) {
    auto add = [alpha](const std::vector<double>& src, std::vector<double>& dst) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
    };
    add(g.cls.w, p.cls.w);
    add(g.cls.b, p.cls.b);
    add(g.box.w, p.box.w);
    add(g.box.b, p.box.b);
    add(g.obj.w, p.obj.w);
    add(g.obj.b, p.obj.b);
    add(g.iou_head.w, p.iou_head.w);
    add(g.iou_head.b, p.iou_head.b);
}

std::vector<double> flatten(const ModelParams& params) {
    std::vector<double> out;
    for (const auto* head : {&params.cls, &params.box, &params.obj, &params.iou_head}) {
        out.insert(out.end(), head->w.begin(), head->w.end());
        out.insert(out.end(), head->b.begin(), head->b.end());
    }
    return out;
}

void unflatten(std::span<const double> values, ModelParams& params) {
    std::size_t pos = 0;
    for (auto* head : {&params.cls, &params.box, &params.obj, &params.iou_head}) {
        std::copy_n(values.begin() + pos, head->w.size(), head->w.begin());
        pos += head->w.size();
        std::copy_n(values.begin() + pos, head->b.size(), head->b.begin());
        pos += head->b.size();
    }
    if (pos != values.size()) throw std::invalid_argument("unflatten: size mismatch");
}

Box decode_box(const Anchor& anchor, double stride, const std::array<double, 4>& delta) {
    const double cx = anchor.box.cx() + delta[0] * stride;
    const double cy = anchor.box.cy() + delta[1] * stride;
    const double w = anchor.box.width() * std::exp(delta[2]);
    const double h = anchor.box.height() * std::exp(delta[3]);
    return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

ForwardOutput forward(const ModelParams& params, const FeatureMatrix& features,
                      const AnchorGrid& grid) {
    if (features.dim != params.feature_dim || features.num_anchors != grid.size())
        throw std::invalid_argument("forward: feature shape mismatch");

    const int n = grid.size();
    const int C = params.num_classes;
    ForwardOutput out;
    out.preds.reserve(n);
    out.deltas_raw.resize(n);
    out.deltas.resize(n);
    out.iou_pred.resize(n);
    if (params.fusion == FusionMode::Cop) out.objectness.values.resize(n);
    if (params.fusion == FusionMode::Iop) out.obj1.resize(n);

    std::vector<double> logits(C);
    for (const Anchor& a : grid.anchors) {
        const double* f = features.row(a.id);

        params.cls.apply(f, logits.data());
        std::vector<double> probs(C);
        for (int c = 0; c < C; ++c) probs[c] = sigmoid(logits[c]);

        std::array<double, 4> raw{};
        params.box.apply(f, raw.data());
        out.deltas_raw[a.id] = raw;
        std::array<double, 4> clamped = raw;
        for (double& d : clamped) d = std::clamp(d, -kDeltaClamp, kDeltaClamp);
        out.deltas[a.id] = clamped;
        const double stride = grid.levels[a.level].stride;

        out.preds.push_back(Prediction{a.id, ProbVector(std::move(probs)),
                                       decode_box(a, stride, clamped)});

        if (params.fusion == FusionMode::Cop) {
            params.obj.apply(f, out.objectness.values[a.id].data());
            for (double& o : out.objectness.values[a.id]) o = sigmoid(o);
        } else if (params.fusion == FusionMode::Iop) {
            double z;
            params.obj.apply(f, &z);
            out.obj1[a.id] = sigmoid(z);
        }

        double zi;
        params.iou_head.apply(f, &zi);
        out.iou_pred[a.id] = sigmoid(zi);
    }

    switch (params.fusion) {
        case FusionMode::None:
            out.scored.reserve(n);
            for (const Prediction& p : out.preds) out.scored.push_back(p.probs);
            break;
        case FusionMode::Iop: {
            std::vector<ProbVector> raw_probs;
            raw_probs.reserve(n);
            for (const Prediction& p : out.preds) raw_probs.push_back(p.probs);
            out.scored = iop_fuse(raw_probs, out.obj1);
            break;
        }
        case FusionMode::Cop: {
            out.scored.resize(n);
            for (std::size_t li = 0; li < grid.levels.size(); ++li) {
                const LevelSpec& lv = grid.levels[li];
                const int offset = grid.level_offsets[li];
                const int count = lv.rows * lv.cols;
                std::vector<ProbVector> level_probs;
                level_probs.reserve(count);
                for (int i = 0; i < count; ++i) level_probs.push_back(out.preds[offset + i].probs);
                ObjectnessField level_obj;
                level_obj.values.assign(out.objectness.values.begin() + offset,
                                        out.objectness.values.begin() + offset + count);
                std::vector<ProbVector> fused = cop_fuse(level_probs, level_obj, lv.rows, lv.cols);
                for (int i = 0; i < count; ++i) out.scored[offset + i] = std::move(fused[i]);
            }
            break;
        }
    }
    return out;
}

void AnchorGrads::init(const ModelParams& params, int num_anchors) {
    class_logits.assign(num_anchors, std::vector<double>(params.num_classes, 0.0));
    deltas.assign(num_anchors, {});
    iou_logits.assign(num_anchors, 0.0);
    boxes.assign(num_anchors, {});
    if (params.fusion == FusionMode::Cop) obj_logits.assign(num_anchors, {});
    if (params.fusion == FusionMode::Iop) obj1_logits.assign(num_anchors, 0.0);
}

void fold_grads(const ModelParams& params, const FeatureMatrix& features, const AnchorGrid& grid,
                const ForwardOutput& fwd, AnchorGrads& slots, ModelParams& grads) {
    for (const Anchor& a : grid.anchors) {
        const int i = a.id;
        const double stride = grid.levels[a.level].stride;
        const auto& gb = slots.boxes[i];

        // box corners -> deltas (decoded w/h appear in the corner offsets)
        const double w = a.box.width() * std::exp(fwd.deltas[i][2]);
        const double h = a.box.height() * std::exp(fwd.deltas[i][3]);
        std::array<double, 4> gd = slots.deltas[i];
        gd[0] += (gb[0] + gb[2]) * stride;
        gd[1] += (gb[1] + gb[3]) * stride;
        gd[2] += (gb[2] - gb[0]) * 0.5 * w;
        gd[3] += (gb[3] - gb[1]) * 0.5 * h;
        for (int k = 0; k < 4; ++k)
            if (std::abs(fwd.deltas_raw[i][k]) >= kDeltaClamp) gd[k] = 0.0;  // clamped region

        const double* f = features.row(i);
        auto accumulate = [&](LinearHead& gh, int r, double g) {
            if (g == 0.0) return;
            double* wr = gh.w.data() + static_cast<std::size_t>(r) * gh.in;
            for (int d = 0; d < gh.in; ++d) wr[d] += g * f[d];
            gh.b[r] += g;
        };
        for (int c = 0; c < params.num_classes; ++c) accumulate(grads.cls, c, slots.class_logits[i][c]);
        for (int k = 0; k < 4; ++k) accumulate(grads.box, k, gd[k]);
        if (params.fusion == FusionMode::Cop)
            for (int k = 0; k < 9; ++k) accumulate(grads.obj, k, slots.obj_logits[i][k]);
        if (params.fusion == FusionMode::Iop) accumulate(grads.obj, 0, slots.obj1_logits[i]);
        accumulate(grads.iou_head, 0, slots.iou_logits[i]);
    }
}

}  // namespace lad::sim
