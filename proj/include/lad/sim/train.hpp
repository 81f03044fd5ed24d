#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lad/colad.hpp"
#include "lad/config.hpp"
#include "lad/sim/model.hpp"
#include "lad/sim/world.hpp"

namespace lad::sim {

// Raised when a loss component turns non-finite during training.
class TrainAbort : public std::runtime_error {
public:
    TrainAbort(std::int64_t iteration, std::string component)
        : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration) +
                             " in component '" + component + "'"),
          iteration(iteration),
          component(std::move(component)) {}

    std::int64_t iteration;
    std::string component;
};

struct LossBreakdown {
    double total = 0.0;
    double cls = 0.0;
    double loc = 0.0;
    double iou_head = 0.0;
    double distill_cls = 0.0;
    double distill_loc = 0.0;
    int num_pos = 0;
};

struct HistoryRecord {
    std::int64_t iteration = 0;
    double lr = 0.0;
    LossBreakdown loss;                    // network A
    std::optional<LossBreakdown> loss_b;   // CoLAD partner
    std::optional<RoleDecision> role;      // CoLAD only
    std::optional<double> eval_ap50;       // periodic, when enabled
};

// Runtime strategy: config plus loaded teacher parameters where required.
struct StrategySpec {
    StrategyKind kind = StrategyKind::Baseline;
    DistillLoss distill_loss = DistillLoss::KlFocal;
    SwitchCriterion criterion = SwitchCriterion::StdOverMean;
    const ModelParams* teacher = nullptr;

    // Optional explicit initial parameters (tests and resumed runs);
    // defaults draw from the seed's "init" stream.
    const ModelParams* init_a = nullptr;
    const ModelParams* init_b = nullptr;
};

struct TrainResult {
    ModelParams params;
    std::optional<ModelParams> partner;  // CoLAD network B
    std::vector<HistoryRecord> history;
};

// Inputs for one scene's loss with a frozen assignment; lets tests compare
// the analytic parameter gradient against finite differences.
struct SceneLossContext {
    const Scene* scene = nullptr;
    const FeatureMatrix* features = nullptr;
    const AnchorGrid* grid = nullptr;
    const AssignResult* assignment = nullptr;
    double gamma_cls = 2.0;

    // distillation extras; teacher_preds may be null for no distillation
    const std::vector<Prediction>* teacher_preds = nullptr;
    DistillLoss distill_loss = DistillLoss::KlFocal;
    double gamma_distill = 0.5;
};

// Loss and (optionally) parameter gradients for one scene under a frozen
// assignment. Gradients accumulate into *grads when non-null.
LossBreakdown scene_loss_and_grad(const ModelParams& params, const ForwardOutput& fwd,
                                  const SceneLossContext& ctx, ModelParams* grads);

// SGD training under the configured strategy. Deterministic in
// (config, seed) for any thread count.
TrainResult train(const ExperimentConfig& config, const std::vector<Scene>& dataset,
                  const StrategySpec& strategy);

}  // namespace lad::sim
