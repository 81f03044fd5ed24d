#pragma once

#include <cstddef>
#include <vector>

#include "lad/geometry.hpp"

namespace lad {

// Per-class probabilities from independent sigmoids; entries need not sum
// to 1. Values are validated to [0,1]; consumers clamp away from the
// boundaries before taking logs (see kEps).
class ProbVector {
public:
    ProbVector() = default;
    explicit ProbVector(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const ProbVector& other) const = default;

private:
    std::vector<double> values_;
};

// Scalar loss with partial derivatives. For probability losses the gradient
// is taken w.r.t. the student's per-class logits (p = sigmoid(z)); for
// iou_loss it is w.r.t. the four predicted box coordinates.
struct LossValue {
    double value = 0.0;
    std::vector<double> grad;
};

// Clamp applied to a probability before it enters a logarithm.
inline constexpr double kEps = 1e-7;

double clamp_prob(double p);

// Binary focal loss without alpha weighting:
//   target=1: (1-p)^gamma * (-log p),  target=0: p^gamma * (-log(1-p)).
// The modulating factor is differentiated (unlike the kl_focal weight).
// Throws std::invalid_argument for gamma < 0.
LossValue focal_loss(double p, int target, double gamma);

// Scalar helpers used by the trainer on hot paths. d_dz is the derivative
// w.r.t. the logit, d_dp w.r.t. the (possibly fused) probability itself.
double focal_value(double p, int target, double gamma);
double focal_d_dz(double p, int target, double gamma);
double focal_d_dp(double p, int target, double gamma);

// Focal-weighted binary KL distillation over C independent classes:
//   sum_c w_c * (p_t log(p_t/p_s) + (1-p_t) log((1-p_t)/(1-p_s))),
// with w_c = |p_t - p_s|^gamma treated as a constant in the gradient.
// The teacher enters exactly (0*log 0 := 0 at the endpoints); the student
// is clamped, so a one-hot teacher reduces to summed focal_loss.
LossValue kl_focal(const ProbVector& p_t, const ProbVector& p_s, double gamma);

// Same loss with caller-supplied per-class weights; kl_focal delegates here.
// Exposed so gradient checks can hold the weights fixed.
LossValue kl_focal_weighted(const ProbVector& p_t, const ProbVector& p_s,
                            const std::vector<double>& weights);

// L1 (order 1) or squared L2 (order 2) distance between probability
// vectors, gradient w.r.t. student logits. L1 subgradient is 0 at ties.
LossValue soft_lp(const ProbVector& p_t, const ProbVector& p_s, int order);

// 1 - IoU(b_pred, b_target) with piecewise-analytic gradient in the four
// predicted coordinates (zero wherever the intersection is inactive).
LossValue iou_loss(const Box& b_pred, const Box& b_target);

// d(IoU)/d(pred coords); shared by iou_loss and the IoU-head training path.
void iou_grad(const Box& pred, const Box& target, double out[4]);

// Indices i with max_j IoU(teacher_boxes[i], gt_boxes[j]) strictly above 0.5;
// the boxes selected for localization distillation.
std::vector<int> select_loc_distill(const std::vector<Box>& teacher_boxes,
                                    const std::vector<Box>& gt_boxes);

}  // namespace lad
