#include "lad/sim/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lad/eval.hpp"
#include "lad/parallel.hpp"

namespace lad::sim {

namespace {

bool needs_teacher(StrategyKind kind) {
    return kind == StrategyKind::SoftLabel || kind == StrategyKind::Lad ||
           kind == StrategyKind::SoLad;
}

bool has_distill(StrategyKind kind) {
    return kind == StrategyKind::SoftLabel || kind == StrategyKind::SoLad;
}

// Classification gradient routed through the fusion stage when active.
void classification_backward(const ModelParams& params, const ForwardOutput& fwd,
                             const AnchorGrid& grid,
                             const std::vector<std::vector<double>>& grad_fused,
                             AnchorGrads& slots) {
    const int n = grid.size();
    if (params.fusion == FusionMode::Iop) {
        std::vector<ProbVector> raw;
        raw.reserve(n);
        for (const Prediction& p : fwd.preds) raw.push_back(p.probs);
        std::vector<std::vector<double>> gcls;
        std::vector<double> gobj;
        iop_fuse_backward(grad_fused, raw, fwd.obj1, gcls, gobj);
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < params.num_classes; ++c) slots.class_logits[i][c] += gcls[i][c];
            slots.obj1_logits[i] += gobj[i];
        }
        return;
    }
    // COP: per level
    for (std::size_t li = 0; li < grid.levels.size(); ++li) {
        const LevelSpec& lv = grid.levels[li];
        const int offset = grid.level_offsets[li];
        const int count = lv.rows * lv.cols;
        std::vector<ProbVector> level_probs;
        level_probs.reserve(count);
        for (int i = 0; i < count; ++i) level_probs.push_back(fwd.preds[offset + i].probs);
        ObjectnessField level_obj;
        level_obj.values.assign(fwd.objectness.values.begin() + offset,
                                fwd.objectness.values.begin() + offset + count);
        std::vector<std::vector<double>> level_grad(grad_fused.begin() + offset,
                                                    grad_fused.begin() + offset + count);
        std::vector<std::vector<double>> gcls;
        std::vector<std::array<double, 9>> gobj;
        cop_fuse_backward(level_grad, level_probs, level_obj, lv.rows, lv.cols, gcls, gobj);
        for (int i = 0; i < count; ++i) {
            for (int c = 0; c < params.num_classes; ++c)
                slots.class_logits[offset + i][c] += gcls[i][c];
            for (int k = 0; k < 9; ++k) slots.obj_logits[offset + i][k] += gobj[i][k];
        }
    }
}

}  // namespace

LossBreakdown scene_loss_and_grad(const ModelParams& params, const ForwardOutput& fwd,
                                  const SceneLossContext& ctx, ModelParams* grads) {
    const AnchorGrid& grid = *ctx.grid;
    const std::vector<LabeledObject>& objects = ctx.scene->objects;
    const Assignment& assignment = ctx.assignment->assignment;
    const int n = grid.size();
    const int C = params.num_classes;

    LossBreakdown out;
    for (int label : assignment.labels)
        if (label != kNegative) ++out.num_pos;
    const double norm = 1.0 / std::max(1, out.num_pos);

    AnchorGrads slots;
    slots.init(params, n);

    // classification: focal against the assignment's one-hot targets, on
    // fused probabilities when a fusion mode is active
    const bool fused = params.fusion != FusionMode::None;
    std::vector<std::vector<double>> grad_fused;
    if (fused) grad_fused.assign(n, std::vector<double>(C, 0.0));
    double cls_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int label = assignment.labels[i];
        const ProbVector& probs = fused ? fwd.scored[i] : fwd.preds[i].probs;
        for (int c = 0; c < C; ++c) {
            const int y = (label != kNegative && objects[label].class_id == c) ? 1 : 0;
            cls_sum += focal_value(probs[c], y, ctx.gamma_cls);
            if (fused)
                grad_fused[i][c] = focal_d_dp(probs[c], y, ctx.gamma_cls) * norm;
            else
                slots.class_logits[i][c] += focal_d_dz(probs[c], y, ctx.gamma_cls) * norm;
        }
    }
    if (fused) classification_backward(params, fwd, grid, grad_fused, slots);
    out.cls = cls_sum * norm;

    // localization (1 - IoU) and the IoU head, positives only
    double loc_sum = 0.0;
    double iou_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int label = assignment.labels[i];
        if (label == kNegative) continue;
        const Box& gt = objects[label].box;
        const Box& pb = fwd.preds[i].box;

        const LossValue lv = iou_loss(pb, gt);
        loc_sum += lv.value;
        for (int k = 0; k < 4; ++k) slots.boxes[i][k] += lv.grad[k] * norm;

        const double actual = iou(pb, gt);
        const double ip = fwd.iou_pred[i];
        const double err = ip - actual;
        iou_sum += err * err;
        slots.iou_logits[i] += 2.0 * err * ip * (1.0 - ip) * norm;
        double gio[4];
        iou_grad(pb, gt, gio);
        for (int k = 0; k < 4; ++k) slots.boxes[i][k] += -2.0 * err * gio[k] * norm;
    }
    out.loc = loc_sum * norm;
    out.iou_head = iou_sum * norm;

    // distillation against the cached teacher predictions
    if (ctx.teacher_preds != nullptr) {
        const std::vector<Prediction>& teacher = *ctx.teacher_preds;
        double dcls_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            LossValue lv;
            switch (ctx.distill_loss) {
                case DistillLoss::KlFocal:
                    lv = kl_focal(teacher[i].probs, fwd.preds[i].probs, ctx.gamma_distill);
                    break;
                case DistillLoss::L1:
                    lv = soft_lp(teacher[i].probs, fwd.preds[i].probs, 1);
                    break;
                case DistillLoss::L2:
                    lv = soft_lp(teacher[i].probs, fwd.preds[i].probs, 2);
                    break;
            }
            dcls_sum += lv.value;
            for (int c = 0; c < C; ++c) slots.class_logits[i][c] += lv.grad[c] * norm;
        }
        out.distill_cls = dcls_sum * norm;

        std::vector<Box> teacher_boxes;
        teacher_boxes.reserve(n);
        for (const Prediction& p : teacher) teacher_boxes.push_back(p.box);
        std::vector<Box> gt_boxes;
        gt_boxes.reserve(objects.size());
        for (const LabeledObject& o : objects) gt_boxes.push_back(o.box);
        const std::vector<int> selected = select_loc_distill(teacher_boxes, gt_boxes);
        if (!selected.empty()) {
            const double dnorm = 1.0 / static_cast<double>(selected.size());
            double dloc_sum = 0.0;
            for (int i : selected) {
                const LossValue lv = iou_loss(fwd.preds[i].box, teacher[i].box);
                dloc_sum += lv.value;
                for (int k = 0; k < 4; ++k) slots.boxes[i][k] += lv.grad[k] * dnorm;
            }
            out.distill_loc = dloc_sum * dnorm;
        }
    }

    out.total = out.cls + out.loc + out.iou_head + out.distill_cls + out.distill_loc;
    if (grads != nullptr) fold_grads(params, *ctx.features, grid, fwd, slots, *grads);
    return out;
}

namespace {

void check_finite(const LossBreakdown& loss, std::int64_t iteration, const std::string& prefix) {
    const std::pair<const char*, double> items[] = {
        {"cls", loss.cls},
        {"loc", loss.loc},
        {"iou_head", loss.iou_head},
        {"distill_cls", loss.distill_cls},
        {"distill_loc", loss.distill_loc},
    };
    for (const auto& [name, value] : items)
        if (!std::isfinite(value)) throw TrainAbort(iteration, prefix + name);
}

LossBreakdown mean_loss(const std::vector<LossBreakdown>& per_scene) {
    LossBreakdown mean;
    if (per_scene.empty()) return mean;
    for (const LossBreakdown& l : per_scene) {
        mean.total += l.total;
        mean.cls += l.cls;
        mean.loc += l.loc;
        mean.iou_head += l.iou_head;
        mean.distill_cls += l.distill_cls;
        mean.distill_loc += l.distill_loc;
        mean.num_pos += l.num_pos;
    }
    const double inv = 1.0 / static_cast<double>(per_scene.size());
    mean.total *= inv;
    mean.cls *= inv;
    mean.loc *= inv;
    mean.iou_head *= inv;
    mean.distill_cls *= inv;
    mean.distill_loc *= inv;
    return mean;
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const std::vector<Scene>& dataset,
                  const StrategySpec& strategy) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (needs_teacher(strategy.kind) && strategy.teacher == nullptr)
        throw std::invalid_argument("train: strategy requires a teacher checkpoint");

    const AnchorGrid grid = generate_anchors(config.anchor_levels);
    const int C = config.world.num_classes;
    const int D = feature_dim(C);
    const int N = static_cast<int>(dataset.size());
    const int B = std::max(1, config.train.batch_scenes);
    const int threads = std::max(1, config.train.threads);
    const double gamma = config.train.gamma_assign;
    const bool colad = strategy.kind == StrategyKind::CoLad;

    std::vector<FeatureMatrix> feats(N);
    parallel_for(N, threads, [&](int s) {
        feats[s] = extract_features(dataset[s], grid, config.world);
    });

    // Teacher predictions (and LAD assignments) are fixed for the whole run.
    std::vector<std::vector<Prediction>> teacher_preds;
    std::vector<AssignResult> teacher_assign;
    if (needs_teacher(strategy.kind)) {
        if (strategy.teacher->feature_dim != D || strategy.teacher->num_classes != C)
            throw std::invalid_argument("train: teacher checkpoint shape mismatch");
        teacher_preds.resize(N);
        if (strategy.kind != StrategyKind::SoftLabel) teacher_assign.resize(N);
        parallel_for(N, threads, [&](int s) {
            ForwardOutput tf = forward(*strategy.teacher, feats[s], grid);
            teacher_preds[s] = std::move(tf.preds);
            if (strategy.kind != StrategyKind::SoftLabel)
                teacher_assign[s] = lad_assign(teacher_preds[s], grid, dataset[s].objects, gamma);
        });
    }

    const rng::Stream init_stream(config.train.seed, "init");
    const rng::Stream batch_stream(config.train.seed, "batch");

    ModelParams net_a = strategy.init_a != nullptr
                            ? *strategy.init_a
                            : init_params(D, C, config.fusion.mode,
                                          init_stream.fork(colad ? 0 : config.train.init_fork));
    ModelParams net_b;
    if (colad) {
        net_b = strategy.init_b != nullptr ? *strategy.init_b
                                           : init_params(D, C, config.fusion.mode, init_stream.fork(1));
    }

    const int warmup = config.effective_warmup();
    const int iters = config.train.iterations;

    TrainResult result;
    result.history.reserve(iters);

    std::vector<int> batch(B);
    for (int t = 0; t < iters; ++t) {
        const double lr =
            config.train.lr *
            (warmup > 0 ? std::min(1.0, static_cast<double>(t + 1) / warmup) : 1.0);
        for (int j = 0; j < B; ++j)
            batch[j] = static_cast<int>(
                batch_stream.uniform_int(static_cast<std::uint64_t>(t) * B + j, N));

        HistoryRecord record;
        record.iteration = t;
        record.lr = lr;

        if (!colad) {
            std::vector<LossBreakdown> losses(B);
            std::vector<ModelParams> grads(B);
            std::vector<AssignResult> local_assign(B);
            parallel_for(B, threads, [&](int j) {
                const int s = batch[j];
                const ForwardOutput fwd = forward(net_a, feats[s], grid);
                const AssignResult* asg;
                if (strategy.kind == StrategyKind::Lad || strategy.kind == StrategyKind::SoLad) {
                    asg = &teacher_assign[s];
                } else {
                    local_assign[j] = paa_assign(fwd.preds, grid, dataset[s].objects, gamma);
                    asg = &local_assign[j];
                }
                SceneLossContext ctx;
                ctx.scene = &dataset[s];
                ctx.features = &feats[s];
                ctx.grid = &grid;
                ctx.assignment = asg;
                ctx.gamma_cls = gamma;
                if (has_distill(strategy.kind)) {
                    ctx.teacher_preds = &teacher_preds[s];
                    ctx.distill_loss = strategy.distill_loss;
                    ctx.gamma_distill = config.train.gamma_distill;
                }
                grads[j] = zeros_like(net_a);
                losses[j] = scene_loss_and_grad(net_a, fwd, ctx, &grads[j]);
            });
            for (int j = 0; j < B; ++j) check_finite(losses[j], t, "");
            ModelParams total = zeros_like(net_a);
            for (int j = 0; j < B; ++j) axpy(1.0, grads[j], total);
            axpy(-lr / B, total, net_a);
            record.loss = mean_loss(losses);
        } else {
            // phase 1: both networks' forwards and assignment stages
            std::vector<ForwardOutput> fwd_a(B), fwd_b(B);
            std::vector<AssignResult> res_a(B), res_b(B);
            parallel_for(2 * B, threads, [&](int idx) {
                const int j = idx % B;
                const int s = batch[j];
                if (idx < B) {
                    fwd_a[j] = forward(net_a, feats[s], grid);
                    res_a[j] = paa_assign(fwd_a[j].preds, grid, dataset[s].objects, gamma);
                } else {
                    fwd_b[j] = forward(net_b, feats[s], grid);
                    res_b[j] = paa_assign(fwd_b[j].preds, grid, dataset[s].objects, gamma);
                }
            });
            ColadBatchStep step = colad_batch_decide(std::move(res_a), std::move(res_b),
                                                     strategy.criterion, t);
            const std::vector<AssignResult>& shared = step.teacher_results();

            // phase 2: both networks train against the teacher's labels
            std::vector<LossBreakdown> loss_a(B), loss_b(B);
            std::vector<ModelParams> grad_a(B), grad_b(B);
            parallel_for(2 * B, threads, [&](int idx) {
                const int j = idx % B;
                const int s = batch[j];
                SceneLossContext ctx;
                ctx.scene = &dataset[s];
                ctx.features = &feats[s];
                ctx.grid = &grid;
                ctx.assignment = &shared[j];
                ctx.gamma_cls = gamma;
                if (idx < B) {
                    grad_a[j] = zeros_like(net_a);
                    loss_a[j] = scene_loss_and_grad(net_a, fwd_a[j], ctx, &grad_a[j]);
                } else {
                    grad_b[j] = zeros_like(net_b);
                    loss_b[j] = scene_loss_and_grad(net_b, fwd_b[j], ctx, &grad_b[j]);
                }
            });
            for (int j = 0; j < B; ++j) check_finite(loss_a[j], t, "a.");
            for (int j = 0; j < B; ++j) check_finite(loss_b[j], t, "b.");
            ModelParams total_a = zeros_like(net_a);
            ModelParams total_b = zeros_like(net_b);
            for (int j = 0; j < B; ++j) {
                axpy(1.0, grad_a[j], total_a);
                axpy(1.0, grad_b[j], total_b);
            }
            axpy(-lr / B, total_a, net_a);
            axpy(-lr / B, total_b, net_b);
            record.loss = mean_loss(loss_a);
            record.loss_b = mean_loss(loss_b);
            record.role = step.decision;
        }

        if (config.train.eval_every > 0 && (t + 1) % config.train.eval_every == 0) {
            const std::size_t k = std::min<std::size_t>(dataset.size(), 32);
            const std::vector<Scene> subset(dataset.begin(), dataset.begin() + k);
            record.eval_ap50 = evaluate_model(net_a, subset, config).ap50;
        }
        result.history.push_back(std::move(record));
    }

    result.params = std::move(net_a);
    if (colad) result.partner = std::move(net_b);
    return result;
}

}  // namespace lad::sim
