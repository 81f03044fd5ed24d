#include "lad/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lad {

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("ProbVector: entries must be finite and in [0,1]");
    }
}

double clamp_prob(double p) { return std::clamp(p, kEps, 1.0 - kEps); }

double focal_value(double p, int target, double gamma) {
    const double q = clamp_prob(p);
    if (target == 1) return std::pow(1.0 - q, gamma) * (-std::log(q));
    return std::pow(q, gamma) * (-std::log1p(-q));
}

double focal_d_dp(double p, int target, double gamma) {
    const double q = clamp_prob(p);
    if (target == 1) {
        double g = -std::pow(1.0 - q, gamma) / q;
        if (gamma != 0.0) g += gamma * std::pow(1.0 - q, gamma - 1.0) * std::log(q);
        return g;
    }
    double g = std::pow(q, gamma) / (1.0 - q);
    if (gamma != 0.0) g -= gamma * std::pow(q, gamma - 1.0) * std::log1p(-q);
    return g;
}

double focal_d_dz(double p, int target, double gamma) {
    const double q = clamp_prob(p);
    if (target == 1) return gamma * q * std::pow(1.0 - q, gamma) * std::log(q) - std::pow(1.0 - q, gamma + 1.0);
    return -gamma * std::pow(q, gamma) * (1.0 - q) * std::log1p(-q) + std::pow(q, gamma + 1.0);
}

LossValue focal_loss(double p, int target, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    if (target != 0 && target != 1) throw std::invalid_argument("focal_loss: target must be 0 or 1");
    return LossValue{focal_value(p, target, gamma), {focal_d_dz(p, target, gamma)}};
}

LossValue kl_focal_weighted(const ProbVector& p_t, const ProbVector& p_s,
                            const std::vector<double>& weights) {
    if (p_t.size() != p_s.size() || weights.size() != p_t.size())
        throw std::invalid_argument("kl_focal: length mismatch");
    LossValue out;
    out.grad.resize(p_t.size());
    for (std::size_t c = 0; c < p_t.size(); ++c) {
        const double t = p_t[c];
        const double s = clamp_prob(p_s[c]);
        double kl = 0.0;
        if (t > 0.0) kl += t * (std::log(t) - std::log(s));
        if (t < 1.0) kl += (1.0 - t) * (std::log1p(-t) - std::log1p(-s));
        out.value += weights[c] * kl;
        out.grad[c] = weights[c] * (s - t);
    }
    return out;
}

LossValue kl_focal(const ProbVector& p_t, const ProbVector& p_s, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("kl_focal: gamma must be >= 0");
    if (p_t.size() != p_s.size()) throw std::invalid_argument("kl_focal: length mismatch");
    std::vector<double> w(p_t.size());
    for (std::size_t c = 0; c < p_t.size(); ++c)
        w[c] = std::pow(std::abs(p_t[c] - clamp_prob(p_s[c])), gamma);
    return kl_focal_weighted(p_t, p_s, w);
}

LossValue soft_lp(const ProbVector& p_t, const ProbVector& p_s, int order) {
    if (p_t.size() != p_s.size()) throw std::invalid_argument("soft_lp: length mismatch");
    if (order != 1 && order != 2) throw std::invalid_argument("soft_lp: order must be 1 or 2");
    LossValue out;
    out.grad.resize(p_t.size());
    for (std::size_t c = 0; c < p_t.size(); ++c) {
        const double d = p_s[c] - p_t[c];
        const double dsig = p_s[c] * (1.0 - p_s[c]);
        if (order == 1) {
            out.value += std::abs(d);
            out.grad[c] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * dsig;
        } else {
            out.value += d * d;
            out.grad[c] = 2.0 * d * dsig;
        }
    }
    return out;
}

void iou_grad(const Box& a, const Box& b, double out[4]) {
    out[0] = out[1] = out[2] = out[3] = 0.0;
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    const double uni = a.area() + b.area() - std::max(0.0, iw) * std::max(0.0, ih);
    if (uni <= 0.0) return;

    // dA/d(coord) of the predicted box
    const double dA[4] = {-(a.y2 - a.y1), -(a.x2 - a.x1), a.y2 - a.y1, a.x2 - a.x1};
    double dI[4] = {0.0, 0.0, 0.0, 0.0};
    double inter = 0.0;
    if (iw > 0.0 && ih > 0.0) {
        inter = iw * ih;
        if (a.x1 >= b.x1) dI[0] = -ih;
        if (a.y1 >= b.y1) dI[1] = -iw;
        if (a.x2 <= b.x2) dI[2] = ih;
        if (a.y2 <= b.y2) dI[3] = iw;
    }
    for (int k = 0; k < 4; ++k) {
        const double dU = dA[k] - dI[k];
        out[k] = (dI[k] * uni - inter * dU) / (uni * uni);
    }
}

LossValue iou_loss(const Box& b_pred, const Box& b_target) {
    LossValue out;
    out.value = 1.0 - iou(b_pred, b_target);
    out.grad.resize(4);
    double g[4];
    iou_grad(b_pred, b_target, g);
    for (int k = 0; k < 4; ++k) out.grad[k] = -g[k];
    return out;
}

std::vector<int> select_loc_distill(const std::vector<Box>& teacher_boxes,
                                    const std::vector<Box>& gt_boxes) {
    std::vector<int> selected;
    if (gt_boxes.empty()) return selected;
    for (std::size_t i = 0; i < teacher_boxes.size(); ++i) {
        double best = 0.0;
        for (const Box& g : gt_boxes) best = std::max(best, iou(teacher_boxes[i], g));
        if (best > 0.5) selected.push_back(static_cast<int>(i));
    }
    return selected;
}

}  // namespace lad
