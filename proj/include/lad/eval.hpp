#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lad/config.hpp"
#include "lad/geometry.hpp"
#include "lad/sim/model.hpp"
#include "lad/sim/world.hpp"

namespace lad {

struct Detection {
    std::int64_t scene_id = 0;
    Box box;
    int class_id = 0;
    double score = 0.0;
};

struct GtBox {
    std::int64_t scene_id = 0;
    Box box;
};

struct GtObject {
    std::int64_t scene_id = 0;
    int class_id = 0;
    Box box;
};

struct ErrorCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t loc_err = 0;
};

struct MetricsReport {
    double ap50 = 0.0;
    double map = 0.0;  // mean over IoU 0.50:0.95:0.05
    std::vector<std::optional<double>> per_class_ap50;
    ErrorCounts counts;
    int classes_evaluated = 0;
};

// Single-class average precision under greedy descending-score matching
// (a detection claims the best-IoU unmatched ground truth of its scene at
// IoU >= threshold) with all-point precision-envelope integration.
// Returns nullopt when the class has neither ground truths nor detections
// (excluded from means); detections with zero ground truths give 0.
std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<GtBox>& gts, double iou_threshold);

// TIDE-inspired simplification: unmatched detections whose best IoU with a
// same-class ground truth lies in [bg, fg) count as localization errors,
// other unmatched detections as false positives; unmatched ground truths
// are false negatives.
ErrorCounts error_breakdown(const std::vector<Detection>& dets, const std::vector<GtObject>& gts,
                            double fg_threshold = 0.5, double bg_threshold = 0.1);

MetricsReport compute_metrics(const std::vector<Detection>& dets,
                              const std::vector<GtObject>& gts, int num_classes);

// Detection pipeline: score anchors by max fused class probability
// (optionally multiplied by the IoU head), drop scores below the floor,
// then per-class NMS.
std::vector<Detection> detect_scene(const sim::ModelParams& params, const sim::Scene& scene,
                                    const AnchorGrid& grid, const ExperimentConfig& config);

MetricsReport evaluate_model(const sim::ModelParams& params, const std::vector<sim::Scene>& scenes,
                             const ExperimentConfig& config);

}  // namespace lad
