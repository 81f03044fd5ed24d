#include "lad/assign.hpp"

#include <algorithm>
#include <stdexcept>

namespace lad {

std::vector<int> candidate_select(const AnchorGrid& anchors, const LabeledObject& object) {
    std::vector<int> ids;
    for (const Anchor& a : anchors.anchors)
        if (iou(a.box, object.box) >= 0.1) ids.push_back(a.id);
    return ids;
}

double assignment_cost(const Prediction& pred, const LabeledObject& object, double gamma) {
    double fl = 0.0;
    for (std::size_t c = 0; c < pred.probs.size(); ++c)
        fl += focal_value(pred.probs[c], static_cast<int>(c) == object.class_id ? 1 : 0, gamma);
    return fl + (1.0 - iou(pred.box, object.box));
}

ThresholdResult positives_from_costs(const std::vector<CandidateCost>& candidates) {
    ThresholdResult out;
    if (candidates.empty()) {
        out.fit.degenerate = true;
        return out;
    }
    std::vector<double> costs;
    costs.reserve(candidates.size());
    for (const CandidateCost& c : candidates) costs.push_back(c.cost);
    out.fit = fit_gmm2(costs);

    if (out.fit.degenerate) {
        // Single candidate or zero-variance costs: everything is positive.
        for (const CandidateCost& c : candidates) out.positive_ids.push_back(c.anchor_id);
        return out;
    }
    for (const CandidateCost& c : candidates)
        if (c.cost < out.fit.model.mu1) out.positive_ids.push_back(c.anchor_id);
    return out;
}

AssignResult paa_assign(const std::vector<Prediction>& preds, const AnchorGrid& anchors,
                        const std::vector<LabeledObject>& objects, double gamma) {
    const int num_anchors = anchors.size();
    if (static_cast<int>(preds.size()) != num_anchors)
        throw std::invalid_argument("paa_assign: one prediction per anchor required");

    AssignResult result;
    result.costs.per_object.resize(objects.size());
    result.fits.resize(objects.size());
    result.positives.resize(objects.size());

    // claim[anchor] = (cost, object index) of the best positive claim so far
    std::vector<std::pair<double, int>> claim(num_anchors, {0.0, kNegative});

    for (std::size_t oi = 0; oi < objects.size(); ++oi) {
        auto& cands = result.costs.per_object[oi];
        for (int id : candidate_select(anchors, objects[oi])) {
            const Prediction& p = preds[id];
            cands.push_back(CandidateCost{id, assignment_cost(p, objects[oi], gamma)});
        }
        if (cands.empty()) {
            result.objects_without_candidates.push_back(static_cast<int>(oi));
            result.fits[oi].degenerate = true;
            continue;
        }
        ThresholdResult th = positives_from_costs(cands);
        result.fits[oi] = std::move(th.fit);

        for (int id : th.positive_ids) {
            double cost = 0.0;
            for (const CandidateCost& c : cands)
                if (c.anchor_id == id) { cost = c.cost; break; }
            auto& cl = claim[id];
            if (cl.second == kNegative || cost < cl.first) cl = {cost, static_cast<int>(oi)};
        }
    }

    result.assignment.labels.assign(num_anchors, kNegative);
    for (int a = 0; a < num_anchors; ++a) {
        if (claim[a].second != kNegative) {
            result.assignment.labels[a] = claim[a].second;
            result.positives[claim[a].second].push_back(a);
        }
    }
    return result;
}

AssignResult lad_assign(const std::vector<Prediction>& teacher_preds, const AnchorGrid& anchors,
                        const std::vector<LabeledObject>& objects, double gamma) {
    return paa_assign(teacher_preds, anchors, objects, gamma);
}

}  // namespace lad
