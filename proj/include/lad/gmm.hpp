#pragma once

#include <span>
#include <vector>

namespace lad {

// Two-component 1-D Gaussian mixture. After a fit the components are sorted
// so mu1 <= mu2; sigmas are floored at kSigmaFloor and pi1 + pi2 == 1.
struct Gmm2 {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double pi1 = 0.5;
    double pi2 = 0.5;
};

inline constexpr double kSigmaFloor = 1e-6;

struct FitReport {
    Gmm2 model;
    int iterations = 0;
    double final_loglik = 0.0;
    bool degenerate = false;           // n == 1 or zero-variance input
    std::vector<double> loglik_trace;  // value at init, then after each EM update
};

// EM fit with deterministic initialization: mu at sample min/max,
// sigma1 = sigma2 = max(sample std / 2, floor), pi = 0.5/0.5. Runs until
// |delta loglik| < 1e-6 or 100 iterations. Throws on empty or non-finite
// input. Single or all-equal samples are flagged degenerate, not fit.
FitReport fit_gmm2(std::span<const double> samples);

// sum_i log(pi1 N(x_i; mu1, sigma1) + pi2 N(x_i; mu2, sigma2)),
// evaluated in log space. Throws on an invalid (degenerate) model.
double loglik(std::span<const double> samples, const Gmm2& model);

// Two-component Fisher discriminant (mu2-mu1)^2 / (sigma1^2 + sigma2^2).
// Returns 0 when the model carries no separation signal.
double fisher_score(const Gmm2& model);
double fisher_score(const FitReport& report);

// Posterior component membership: true where component 1 (the low-cost
// mode) has responsibility >= 0.5.
std::vector<bool> posterior_component1(std::span<const double> samples, const Gmm2& model);

}  // namespace lad
