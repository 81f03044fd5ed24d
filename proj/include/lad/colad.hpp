#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lad/assign.hpp"

namespace lad {

enum class SwitchCriterion { StdOverMean, Fisher };

enum class NetworkId { A, B };

struct RoleDecision {
    NetworkId teacher = NetworkId::A;
    double score_a = 0.0;
    double score_b = 0.0;
    SwitchCriterion criterion = SwitchCriterion::StdOverMean;
    std::int64_t iteration = 0;
};

// Population standard deviation over mean (coefficient of variation).
// Throws on empty input; an all-zero cost set scores 0.
double std_over_mean(std::span<const double> costs);

// Separation clarity of one network's assignment stage: Fisher averages
// fisher_score over non-degenerate per-object fits, StdOverMean pools every
// candidate cost. No usable data scores 0.
double network_score(const CostTable& costs, std::span<const FitReport> fits,
                     SwitchCriterion criterion);

struct ColadStep {
    RoleDecision decision;
    AssignResult result_a;
    AssignResult result_b;

    const AssignResult& teacher_result() const {
        return decision.teacher == NetworkId::A ? result_a : result_b;
    }
    const Assignment& assignment() const { return teacher_result().assignment; }
};

// One co-learning step on a single scene: run the cost+GMM stage on both
// networks' predictions, pick the higher-scoring network as teacher (tie
// goes to A) and adopt its assignment as the training labels for both.
ColadStep colad_step(const std::vector<Prediction>& preds_a,
                     const std::vector<Prediction>& preds_b, const AnchorGrid& anchors,
                     const std::vector<LabeledObject>& objects, double gamma,
                     SwitchCriterion criterion, std::int64_t iteration = 0);

// Batch variant used by the trainer: one role decision per iteration,
// scored over all scenes' pooled costs and fits.
struct ColadBatchStep {
    RoleDecision decision;
    std::vector<AssignResult> results_a;  // one per scene
    std::vector<AssignResult> results_b;

    const std::vector<AssignResult>& teacher_results() const {
        return decision.teacher == NetworkId::A ? results_a : results_b;
    }
};

ColadBatchStep colad_batch_decide(std::vector<AssignResult> results_a,
                                  std::vector<AssignResult> results_b,
                                  SwitchCriterion criterion, std::int64_t iteration);

}  // namespace lad
