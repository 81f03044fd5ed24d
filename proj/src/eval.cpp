#include "lad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lad/parallel.hpp"

namespace lad {

namespace {

// Detection order for matching: score desc, then scene, then insertion.
std::vector<int> sorted_det_order(const std::vector<Detection>& dets) {
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].scene_id != dets[b].scene_id) return dets[a].scene_id < dets[b].scene_id;
        return a < b;
    });
    return order;
}

// Greedy matching shared by AP and the error breakdown: returns per-det
// matched gt index (-1 for unmatched) in the original det order.
std::vector<int> greedy_match(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                              double iou_threshold) {
    std::vector<int> match(dets.size(), -1);
    std::vector<char> gt_taken(gts.size(), 0);
    for (int di : sorted_det_order(dets)) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_taken[gi] || gts[gi].scene_id != dets[di].scene_id) continue;
            const double v = iou(dets[di].box, gts[gi].box);
            if (v >= iou_threshold && v > best_iou) {
                best_iou = v;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            match[di] = best_gt;
            gt_taken[best_gt] = 1;
        }
    }
    return match;
}

}  // namespace

std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<GtBox>& gts, double iou_threshold) {
    if (gts.empty() && dets.empty()) return std::nullopt;
    if (gts.empty()) return 0.0;
    if (dets.empty()) return 0.0;

    const std::vector<int> match = greedy_match(dets, gts, iou_threshold);
    const std::vector<int> order = sorted_det_order(dets);

    const std::size_t n = dets.size();
    std::vector<double> precision(n), recall(n);
    int tp = 0;
    const double npos = static_cast<double>(gts.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (match[order[k]] >= 0) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / npos;
    }
    // precision envelope, then area under the all-point interpolated curve
    for (std::size_t k = n - 1; k > 0; --k)
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

ErrorCounts error_breakdown(const std::vector<Detection>& dets, const std::vector<GtObject>& gts,
                            double fg_threshold, double bg_threshold) {
    ErrorCounts counts;
    int max_class = -1;
    for (const Detection& d : dets) max_class = std::max(max_class, d.class_id);
    for (const GtObject& g : gts) max_class = std::max(max_class, g.class_id);

    for (int cls = 0; cls <= max_class; ++cls) {
        std::vector<Detection> cdets;
        std::vector<GtBox> cgts;
        for (const Detection& d : dets)
            if (d.class_id == cls) cdets.push_back(d);
        for (const GtObject& g : gts)
            if (g.class_id == cls) cgts.push_back(GtBox{g.scene_id, g.box});

        const std::vector<int> match = greedy_match(cdets, cgts, fg_threshold);
        std::vector<char> gt_matched(cgts.size(), 0);
        for (std::size_t di = 0; di < cdets.size(); ++di) {
            if (match[di] >= 0) {
                ++counts.tp;
                gt_matched[match[di]] = 1;
                continue;
            }
            double best = 0.0;
            for (const GtBox& g : cgts)
                if (g.scene_id == cdets[di].scene_id)
                    best = std::max(best, iou(cdets[di].box, g.box));
            if (best >= bg_threshold && best < fg_threshold)
                ++counts.loc_err;
            else
                ++counts.fp;
        }
        for (char m : gt_matched)
            if (!m) ++counts.fn;
    }
    return counts;
}

MetricsReport compute_metrics(const std::vector<Detection>& dets,
                              const std::vector<GtObject>& gts, int num_classes) {
    MetricsReport report;
    report.per_class_ap50.resize(num_classes);

    double ap50_sum = 0.0;
    int ap50_n = 0;
    double map_sum = 0.0;
    int map_n = 0;

    for (int cls = 0; cls < num_classes; ++cls) {
        std::vector<Detection> cdets;
        std::vector<GtBox> cgts;
        for (const Detection& d : dets)
            if (d.class_id == cls) cdets.push_back(d);
        for (const GtObject& g : gts)
            if (g.class_id == cls) cgts.push_back(GtBox{g.scene_id, g.box});

        report.per_class_ap50[cls] = average_precision(cdets, cgts, 0.5);
        if (report.per_class_ap50[cls]) {
            ap50_sum += *report.per_class_ap50[cls];
            ++ap50_n;
        }
        for (int t = 0; t < 10; ++t) {
            const auto ap = average_precision(cdets, cgts, 0.5 + 0.05 * t);
            if (ap) {
                map_sum += *ap;
                ++map_n;
            }
        }
    }
    report.ap50 = ap50_n > 0 ? ap50_sum / ap50_n : 0.0;
    report.map = map_n > 0 ? map_sum / map_n : 0.0;
    report.classes_evaluated = ap50_n;
    report.counts = error_breakdown(dets, gts);
    return report;
}

std::vector<Detection> detect_scene(const sim::ModelParams& params, const sim::Scene& scene,
                                    const AnchorGrid& grid, const ExperimentConfig& config) {
    const sim::FeatureMatrix feats = sim::extract_features(scene, grid, config.world);
    const sim::ForwardOutput fwd = sim::forward(params, feats, grid);

    std::vector<Detection> raw;
    for (const Anchor& a : grid.anchors) {
        const ProbVector& scored = fwd.scored[a.id];
        int best_class = 0;
        double best = scored[0];
        for (std::size_t c = 1; c < scored.size(); ++c) {
            if (scored[c] > best) {
                best = scored[c];
                best_class = static_cast<int>(c);
            }
        }
        if (config.fusion.use_iou_head_at_inference) best *= fwd.iou_pred[a.id];
        if (best >= config.eval.score_floor)
            raw.push_back(Detection{scene.id, fwd.preds[a.id].box, best_class, best});
    }

    std::vector<Detection> kept;
    for (int cls = 0; cls < params.num_classes; ++cls) {
        std::vector<std::pair<Box, double>> cls_dets;
        std::vector<int> raw_index;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i].class_id == cls) {
                cls_dets.emplace_back(raw[i].box, raw[i].score);
                raw_index.push_back(static_cast<int>(i));
            }
        }
        for (int k : nms(cls_dets, config.eval.nms_iou)) kept.push_back(raw[raw_index[k]]);
    }
    return kept;
}

MetricsReport evaluate_model(const sim::ModelParams& params, const std::vector<sim::Scene>& scenes,
                             const ExperimentConfig& config) {
    const AnchorGrid grid = generate_anchors(config.anchor_levels);
    std::vector<std::vector<Detection>> per_scene(scenes.size());
    parallel_for(static_cast<int>(scenes.size()), config.train.threads, [&](int i) {
        per_scene[i] = detect_scene(params, scenes[i], grid, config);
    });

    std::vector<Detection> dets;
    std::vector<GtObject> gts;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        dets.insert(dets.end(), per_scene[i].begin(), per_scene[i].end());
        for (const LabeledObject& obj : scenes[i].objects)
            gts.push_back(GtObject{scenes[i].id, obj.class_id, obj.box});
    }
    return compute_metrics(dets, gts, params.num_classes);
}

}  // namespace lad
