#include "lad/colad.hpp"

#include <cmath>
#include <stdexcept>

namespace lad {

double std_over_mean(std::span<const double> costs) {
    if (costs.empty()) throw std::invalid_argument("std_over_mean: empty costs");
    double sum = 0.0;
    for (double c : costs) sum += c;
    const double mean = sum / static_cast<double>(costs.size());
    if (mean == 0.0) return 0.0;
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    var /= static_cast<double>(costs.size());
    return std::sqrt(var) / mean;
}

double network_score(const CostTable& costs, std::span<const FitReport> fits,
                     SwitchCriterion criterion) {
    if (criterion == SwitchCriterion::Fisher) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const FitReport& fr : fits) {
            if (!fr.degenerate) {
                sum += fisher_score(fr);
                ++n;
            }
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }
    std::vector<double> pooled;
    for (const auto& cands : costs.per_object)
        for (const CandidateCost& c : cands) pooled.push_back(c.cost);
    if (pooled.empty()) return 0.0;
    return std_over_mean(pooled);
}

namespace {

// Pools every scene's cost table and fit list into one score.
double score_results(const std::vector<AssignResult>& results, SwitchCriterion criterion) {
    CostTable pooled_costs;
    std::vector<FitReport> pooled_fits;
    for (const AssignResult& r : results) {
        pooled_costs.per_object.insert(pooled_costs.per_object.end(), r.costs.per_object.begin(),
                                       r.costs.per_object.end());
        pooled_fits.insert(pooled_fits.end(), r.fits.begin(), r.fits.end());
    }
    return network_score(pooled_costs, pooled_fits, criterion);
}

}  // namespace

ColadBatchStep colad_batch_decide(std::vector<AssignResult> results_a,
                                  std::vector<AssignResult> results_b,
                                  SwitchCriterion criterion, std::int64_t iteration) {
    ColadBatchStep step;
    step.results_a = std::move(results_a);
    step.results_b = std::move(results_b);
    step.decision.score_a = score_results(step.results_a, criterion);
    step.decision.score_b = score_results(step.results_b, criterion);
    step.decision.criterion = criterion;
    step.decision.iteration = iteration;
    step.decision.teacher =
        step.decision.score_b > step.decision.score_a ? NetworkId::B : NetworkId::A;
    return step;
}

ColadStep colad_step(const std::vector<Prediction>& preds_a,
                     const std::vector<Prediction>& preds_b, const AnchorGrid& anchors,
                     const std::vector<LabeledObject>& objects, double gamma,
                     SwitchCriterion criterion, std::int64_t iteration) {
    std::vector<AssignResult> a;
    a.push_back(paa_assign(preds_a, anchors, objects, gamma));
    std::vector<AssignResult> b;
    b.push_back(paa_assign(preds_b, anchors, objects, gamma));
    ColadBatchStep batch = colad_batch_decide(std::move(a), std::move(b), criterion, iteration);

    ColadStep step;
    step.decision = batch.decision;
    step.result_a = std::move(batch.results_a[0]);
    step.result_b = std::move(batch.results_b[0]);
    return step;
}

}  // namespace lad
