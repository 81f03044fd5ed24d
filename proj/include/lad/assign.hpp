#pragma once

#include <vector>

#include "lad/geometry.hpp"
#include "lad/gmm.hpp"
#include "lad/losses.hpp"

namespace lad {

struct LabeledObject {
    int class_id = 0;
    Box box;
};

// One per anchor: post-sigmoid class probabilities and a decoded box.
struct Prediction {
    int anchor_id = 0;
    ProbVector probs;
    Box box;
};

// Per-anchor label: object index for positives, kNegative otherwise.
inline constexpr int kNegative = -1;

struct Assignment {
    std::vector<int> labels;  // indexed by anchor id

    bool is_positive(int anchor_id) const { return labels[anchor_id] != kNegative; }
};

struct CandidateCost {
    int anchor_id = 0;
    double cost = 0.0;
};

// Per object: assignment costs over its candidate anchors (IoU >= 0.1 rule),
// in anchor-id order.
struct CostTable {
    std::vector<std::vector<CandidateCost>> per_object;
};

struct AssignResult {
    Assignment assignment;
    CostTable costs;
    std::vector<FitReport> fits;             // parallel to objects
    std::vector<std::vector<int>> positives; // final positive anchor ids per object
    std::vector<int> objects_without_candidates;
};

// Anchor ids whose box has IoU >= 0.1 (non-strict) with the object box.
std::vector<int> candidate_select(const AnchorGrid& anchors, const LabeledObject& object);

// c_i = sum_c FL(p_c, 1{c == class}, gamma) + (1 - IoU(b_i, B)); the focal
// term sums binary focal over all classes against the one-hot target.
double assignment_cost(const Prediction& pred, const LabeledObject& object, double gamma);

// Threshold stage for one object's candidate costs: fit the two-component
// mixture and keep candidates with cost strictly below mu1. Degenerate
// cases: a single candidate is positive; zero-variance costs make all
// candidates positive.
struct ThresholdResult {
    FitReport fit;
    std::vector<int> positive_ids;  // anchor ids
};
ThresholdResult positives_from_costs(const std::vector<CandidateCost>& candidates);

// PAA: per object, candidates -> costs -> GMM threshold; anchors claimed by
// several objects stay positive only for the lowest-cost claim (ties to the
// lower object index); everything else is negative.
AssignResult paa_assign(const std::vector<Prediction>& preds, const AnchorGrid& anchors,
                        const std::vector<LabeledObject>& objects, double gamma);

// LAD: the identical pipeline driven by teacher predictions; student
// predictions play no role in the produced labels.
AssignResult lad_assign(const std::vector<Prediction>& teacher_preds, const AnchorGrid& anchors,
                        const std::vector<LabeledObject>& objects, double gamma);

}  // namespace lad
