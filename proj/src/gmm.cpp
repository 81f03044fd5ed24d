#include "lad/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lad {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(sqrt(2*pi))

double log_normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - kHalfLog2Pi;
}

// log(pi1*N1 + pi2*N2) for one sample, stable for tiny densities.
double log_mix(double x, const Gmm2& m) {
    const double la = (m.pi1 > 0.0)
                          ? std::log(m.pi1) + log_normal_pdf(x, m.mu1, m.sigma1)
                          : -std::numeric_limits<double>::infinity();
    const double lb = (m.pi2 > 0.0)
                          ? std::log(m.pi2) + log_normal_pdf(x, m.mu2, m.sigma2)
                          : -std::numeric_limits<double>::infinity();
    const double hi = std::max(la, lb);
    const double lo = std::min(la, lb);
    if (!std::isfinite(hi)) return hi;
    return hi + std::log1p(std::exp(lo - hi));
}

double responsibility1(double x, const Gmm2& m) {
    if (m.pi1 <= 0.0) return 0.0;
    if (m.pi2 <= 0.0) return 1.0;
    const double la = std::log(m.pi1) + log_normal_pdf(x, m.mu1, m.sigma1);
    const double lb = std::log(m.pi2) + log_normal_pdf(x, m.mu2, m.sigma2);
    return 1.0 / (1.0 + std::exp(lb - la));
}

void validate_model(const Gmm2& m) {
    const bool finite = std::isfinite(m.mu1) && std::isfinite(m.mu2) &&
                        std::isfinite(m.sigma1) && std::isfinite(m.sigma2) &&
                        std::isfinite(m.pi1) && std::isfinite(m.pi2);
    if (!finite || m.sigma1 < kSigmaFloor || m.sigma2 < kSigmaFloor || m.pi1 < 0.0 ||
        m.pi2 < 0.0 || std::abs(m.pi1 + m.pi2 - 1.0) > 1e-9)
        throw std::invalid_argument("gmm: degenerate or invalid model");
}

}  // namespace

double loglik(std::span<const double> samples, const Gmm2& model) {
    validate_model(model);
    double total = 0.0;
    for (double x : samples) total += log_mix(x, model);
    return total;
}

FitReport fit_gmm2(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("fit_gmm2: empty input");
    const std::size_t n = samples.size();
    double lo = samples[0], hi = samples[0], sum = 0.0;
    for (double x : samples) {
        if (!std::isfinite(x)) throw std::invalid_argument("fit_gmm2: non-finite sample");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
    }

    FitReport report;
    if (n == 1 || lo == hi) {
        report.degenerate = true;
        report.model = Gmm2{lo, lo, kSigmaFloor, kSigmaFloor, 0.5, 0.5};
        report.final_loglik = loglik(samples, report.model);
        return report;
    }

    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    const double sigma0 = std::max(std::sqrt(var) * 0.5, kSigmaFloor);

    Gmm2 m{lo, hi, sigma0, sigma0, 0.5, 0.5};
    double prev = loglik(samples, m);
    report.loglik_trace.push_back(prev);

    constexpr int kMaxIters = 100;
    constexpr double kTol = 1e-6;
    std::vector<double> r1(n);
    for (int it = 0; it < kMaxIters; ++it) {
        for (std::size_t i = 0; i < n; ++i) r1[i] = responsibility1(samples[i], m);

        double n1 = 0.0, n2 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            n1 += r1[i];
            n2 += 1.0 - r1[i];
            s1 += r1[i] * samples[i];
            s2 += (1.0 - r1[i]) * samples[i];
        }
        // A component with no mass keeps its parameters and drops out via pi.
        if (n1 > 0.0) {
            m.mu1 = s1 / n1;
            double v1 = 0.0;
            for (std::size_t i = 0; i < n; ++i) v1 += r1[i] * (samples[i] - m.mu1) * (samples[i] - m.mu1);
            m.sigma1 = std::max(std::sqrt(v1 / n1), kSigmaFloor);
        }
        if (n2 > 0.0) {
            m.mu2 = s2 / n2;
            double v2 = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                v2 += (1.0 - r1[i]) * (samples[i] - m.mu2) * (samples[i] - m.mu2);
            m.sigma2 = std::max(std::sqrt(v2 / n2), kSigmaFloor);
        }
        m.pi1 = n1 / static_cast<double>(n);
        m.pi2 = n2 / static_cast<double>(n);

        const double cur = loglik(samples, m);
        report.loglik_trace.push_back(cur);
        report.iterations = it + 1;
        if (std::abs(cur - prev) < kTol) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    report.final_loglik = prev;

    if (m.mu1 > m.mu2) {
        std::swap(m.mu1, m.mu2);
        std::swap(m.sigma1, m.sigma2);
        std::swap(m.pi1, m.pi2);
    }
    report.model = m;
    return report;
}

double fisher_score(const Gmm2& model) {
    const double denom = model.sigma1 * model.sigma1 + model.sigma2 * model.sigma2;
    if (!(denom > 0.0)) return 0.0;
    const double d = model.mu2 - model.mu1;
    return d * d / denom;
}

double fisher_score(const FitReport& report) {
    return report.degenerate ? 0.0 : fisher_score(report.model);
}

std::vector<bool> posterior_component1(std::span<const double> samples, const Gmm2& model) {
    std::vector<bool> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = responsibility1(samples[i], model) >= 0.5;
    return out;
}

}  // namespace lad
