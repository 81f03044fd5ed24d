#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lad/gmm.hpp"
#include "lad/rng.hpp"

using namespace lad;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

double gauss_loglik(const std::vector<double>& xs, double mu, double sigma) {
    double total = 0.0;
    for (double x : xs) {
        const double z = (x - mu) / sigma;
        total += -0.5 * z * z - std::log(sigma) - kHalfLog2Pi;
    }
    return total;
}

// Exhaustive split-scan oracle: over all n-1 sorted split points, fit a
// Gaussian MLE to each side and keep the split with the best total
// likelihood. Independent of the EM implementation.
struct OracleSplit {
    std::vector<double> low;   // sorted members of the low cluster
    std::vector<double> high;
};

OracleSplit split_scan_oracle(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 1;
    for (std::size_t k = 1; k < n; ++k) {
        const std::vector<double> left(samples.begin(), samples.begin() + k);
        const std::vector<double> right(samples.begin() + k, samples.end());
        auto mle = [](const std::vector<double>& xs) {
            double mu = 0.0;
            for (double x : xs) mu += x;
            mu /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mu) * (x - mu);
            var /= static_cast<double>(xs.size());
            return std::pair<double, double>{mu, std::max(std::sqrt(var), kSigmaFloor)};
        };
        const auto [mu_l, sd_l] = mle(left);
        const auto [mu_r, sd_r] = mle(right);
        const double ll = gauss_loglik(left, mu_l, sd_l) + gauss_loglik(right, mu_r, sd_r);
        if (ll > best) {
            best = ll;
            best_k = k;
        }
    }
    return OracleSplit{{samples.begin(), samples.begin() + best_k},
                       {samples.begin() + best_k, samples.end()}};
}

// Well-separated two-cluster sample of size n <= 12: cluster gap at least
// 4x the within-cluster range.
std::vector<double> two_cluster_sample(const rng::Stream& s, std::uint64_t trial, int n,
                                       int n_low) {
    const double lo_center = s.uniform(trial * 64, 0.1, 0.5);
    const double spread = 0.03;
    const double gap = 6.0 * (2.0 * spread);
    const double hi_center = lo_center + gap + s.uniform(trial * 64 + 1, 0.0, 0.5);
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) {
        const double center = i < n_low ? lo_center : hi_center;
        xs.push_back(center + s.uniform(trial * 64 + 2 + i, -spread, spread));
    }
    return xs;
}

}  // namespace

TEST_SUITE_BEGIN("gmm");

TEST_CASE("fit_gmm2 input validation") {
    CHECK_THROWS_AS(fit_gmm2(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(fit_gmm2(std::vector<double>{0.1, std::nan("")}), std::invalid_argument);
}

TEST_CASE("degenerate inputs are flagged, not fit") {
    const FitReport single = fit_gmm2(std::vector<double>{0.7});
    CHECK(single.degenerate);
    CHECK(single.model.mu1 == doctest::Approx(0.7));
    CHECK(single.model.mu2 == doctest::Approx(0.7));

    const FitReport flat = fit_gmm2(std::vector<double>{0.3, 0.3, 0.3});
    CHECK(flat.degenerate);
    CHECK(flat.model.mu1 == doctest::Approx(0.3));
    CHECK(flat.model.mu2 == doctest::Approx(0.3));
}

TEST_CASE("two points resolve to the two components") {
    const FitReport fit = fit_gmm2(std::vector<double>{0.1, 0.9});
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.model.mu1 == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(fit.model.mu2 == doctest::Approx(0.9).epsilon(1e-3));
    CHECK(fit.model.mu1 <= fit.model.mu2);
}

TEST_CASE("two-cluster mean recovery within 0.02") {
    const rng::Stream s(42, "gmmclusters");
    std::vector<double> xs;
    for (int i = 0; i < 500; ++i) xs.push_back(0.2 + 0.05 * s.normal(i));
    for (int i = 0; i < 500; ++i) xs.push_back(0.8 + 0.05 * s.normal(1000 + i));
    const FitReport fit = fit_gmm2(xs);
    CHECK_FALSE(fit.degenerate);
    CHECK(std::abs(fit.model.mu1 - 0.2) < 0.02);
    CHECK(std::abs(fit.model.mu2 - 0.8) < 0.02);
    CHECK(fit.model.pi1 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("log-likelihood trace is non-decreasing") {
    const rng::Stream s(7, "gmmmono");
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(s.uniform_int(trial, 40));
        std::vector<double> xs;
        for (int i = 0; i < n; ++i) xs.push_back(s.uniform(trial * 100 + i, 0.0, 3.0));
        const FitReport fit = fit_gmm2(xs);
        if (fit.degenerate) continue;
        for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i)
            CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-12);
    }
}

TEST_CASE("affine equivariance of the fit") {
    const rng::Stream s(9, "gmmaffine");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs = two_cluster_sample(s, trial, 10, 5);
        const double a = s.uniform(50000 + trial, 0.5, 3.0);
        const double b = s.uniform(60000 + trial, 0.0, 5.0);
        std::vector<double> ys;
        for (double x : xs) ys.push_back(a * x + b);

        const FitReport fx = fit_gmm2(xs);
        const FitReport fy = fit_gmm2(ys);
        REQUIRE_FALSE(fx.degenerate);
        REQUIRE_FALSE(fy.degenerate);
        CHECK(fy.model.mu1 == doctest::Approx(a * fx.model.mu1 + b).epsilon(1e-6));
        CHECK(fy.model.mu2 == doctest::Approx(a * fx.model.mu2 + b).epsilon(1e-6));
        CHECK(fy.model.sigma1 == doctest::Approx(a * fx.model.sigma1).epsilon(1e-4));
        CHECK(fy.model.sigma2 == doctest::Approx(a * fx.model.sigma2).epsilon(1e-4));
    }
}

TEST_CASE("posterior split matches the split-scan oracle on separated sets") {
    const rng::Stream s(11, "gmmoracle");
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + static_cast<int>(s.uniform_int(trial, 9));  // 4..12
        const int n_low = 1 + static_cast<int>(s.uniform_int(100000 + trial, n - 1));
        std::vector<double> xs = two_cluster_sample(s, trial, n, n_low);

        const FitReport fit = fit_gmm2(xs);
        REQUIRE_FALSE(fit.degenerate);
        const std::vector<bool> member1 = posterior_component1(xs, fit.model);
        const OracleSplit oracle = split_scan_oracle(xs);

        std::vector<double> em_low, em_high;
        for (std::size_t i = 0; i < xs.size(); ++i)
            (member1[i] ? em_low : em_high).push_back(xs[i]);
        std::sort(em_low.begin(), em_low.end());
        std::sort(em_high.begin(), em_high.end());
        CHECK(em_low == oracle.low);
        CHECK(em_high == oracle.high);
    }
}

TEST_CASE("loglik closed form and translation symmetry") {
    // near-pure component: density peak at mu1
    const Gmm2 m{0.3, 50.0, 0.05, 1.0, 1.0 - 1e-9, 1e-9};
    const double expected = -std::log(0.05 * std::sqrt(2.0 * 3.14159265358979323846));
    CHECK(loglik(std::vector<double>{0.3}, m) == doctest::Approx(expected).epsilon(1e-6));

    const Gmm2 base{0.2, 0.8, 0.1, 0.2, 0.4, 0.6};
    const std::vector<double> xs{0.1, 0.5, 0.9};
    const double delta = 2.5;
    Gmm2 shifted = base;
    shifted.mu1 += delta;
    shifted.mu2 += delta;
    std::vector<double> ys;
    for (double x : xs) ys.push_back(x + delta);
    CHECK(loglik(ys, shifted) == doctest::Approx(loglik(xs, base)).epsilon(1e-12));
}

TEST_CASE("mean loglik bounded by the mixture's peak density") {
    const Gmm2 m{0.2, 0.8, 0.1, 0.2, 0.4, 0.6};
    const double peak_bound =
        std::log(m.pi1 / (m.sigma1 * std::sqrt(2.0 * 3.14159265358979323846)) +
                 m.pi2 / (m.sigma2 * std::sqrt(2.0 * 3.14159265358979323846)));
    const rng::Stream s(13, "gmmbound");
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(s.uniform(i, -1.0, 2.0));
        CHECK(loglik(xs, m) / static_cast<double>(xs.size()) <= peak_bound + 1e-12);
    }
}

TEST_CASE("loglik rejects invalid models") {
    CHECK_THROWS_AS(loglik(std::vector<double>{0.5}, Gmm2{0.2, 0.8, 0.0, 0.1, 0.5, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(loglik(std::vector<double>{0.5}, Gmm2{0.2, 0.8, 0.1, 0.1, 0.7, 0.7}),
                    std::invalid_argument);
}

TEST_CASE("fisher_score arithmetic and scale invariance") {
    CHECK(fisher_score(Gmm2{0.5, 0.5, 0.1, 0.1, 0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(fisher_score(Gmm2{0.2, 0.8, 0.1, 0.1, 0.5, 0.5}) == doctest::Approx(18.0));

    const Gmm2 m{0.2, 0.8, 0.1, 0.15, 0.5, 0.5};
    for (double a : {0.5, 2.0, 7.0}) {
        const Gmm2 scaled{a * m.mu1, a * m.mu2, a * m.sigma1, a * m.sigma2, m.pi1, m.pi2};
        CHECK(fisher_score(scaled) == doctest::Approx(fisher_score(m)).epsilon(1e-12));
    }

    FitReport degenerate;
    degenerate.degenerate = true;
    degenerate.model = Gmm2{0.2, 0.8, 0.1, 0.1, 0.5, 0.5};
    CHECK(fisher_score(degenerate) == 0.0);
}

TEST_SUITE_END();
