#include <doctest.h>

#include <cmath>
#include <vector>

#include "lad/losses.hpp"
#include "lad/rng.hpp"
#include "support/gradcheck.hpp"

using namespace lad;

namespace {

ProbVector random_probs(const rng::Stream& s, std::uint64_t ctr, int C, double lo = 0.02,
                        double hi = 0.98) {
    std::vector<double> v(C);
    for (int c = 0; c < C; ++c) v[c] = s.uniform(ctr * 64 + c, lo, hi);
    return ProbVector(std::move(v));
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("ProbVector validates range") {
    CHECK_NOTHROW(ProbVector({0.0, 0.5, 1.0}));
    CHECK_THROWS_AS(ProbVector({-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(ProbVector({1.1}), std::invalid_argument);
    CHECK_THROWS_AS(ProbVector({std::nan("")}), std::invalid_argument);
}

TEST_CASE("focal_loss closed-form values") {
    CHECK(focal_loss(1.0 - 1e-7, 1, 2.0).value == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(focal_loss(0.5, 1, 0.0).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(focal_loss(0.9, 1, 2.0).value == doctest::Approx(0.01 * -std::log(0.9)).epsilon(1e-9));
    CHECK_THROWS_AS(focal_loss(0.5, 1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(focal_loss(0.5, 2, 1.0), std::invalid_argument);
}

TEST_CASE("focal_loss with gamma 0 is binary cross-entropy") {
    const rng::Stream s(5, "bce");
    for (int t = 0; t < 200; ++t) {
        const double p = s.uniform(t, 0.001, 0.999);
        const int target = static_cast<int>(s.uniform_int(1000 + t, 2));
        const double bce = target == 1 ? -std::log(p) : -std::log(1.0 - p);
        CHECK(std::abs(focal_loss(p, target, 0.0).value - bce) < 1e-12);
    }
}

TEST_CASE("focal_loss gradient matches finite differences at the logit") {
    const rng::Stream s(6, "fgrad");
    const double gammas[] = {0.0, 0.5, 2.0};
    for (int t = 0; t < 1000; ++t) {
        double z = s.uniform(t, -4.0, 4.0);
        const int target = static_cast<int>(s.uniform_int(50000 + t, 2));
        const double gamma = gammas[s.uniform_int(90000 + t, 3)];
        const double analytic = focal_loss(sigmoid(z), target, gamma).grad[0];
        const double numeric =
            central_diff([&] { return focal_loss(sigmoid(z), target, gamma).value; }, z);
        CHECK(grad_close(analytic, numeric));
    }
}

TEST_CASE("kl_focal zero at equality, closed form, non-negative") {
    const ProbVector p({0.3, 0.7, 0.5});
    CHECK(kl_focal(p, p, 0.5).value == doctest::Approx(0.0));

    // C=1 closed form at gamma 0
    const double expected = 0.8 * std::log(0.8 / 0.6) + 0.2 * std::log(0.2 / 0.4);
    CHECK(kl_focal(ProbVector({0.8}), ProbVector({0.6}), 0.0).value ==
          doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(kl_focal(ProbVector({0.5}), ProbVector({0.5, 0.5}), 1.0),
                    std::invalid_argument);

    const rng::Stream s(7, "klpos");
    for (int t = 0; t < 500; ++t) {
        const int C = 1 + static_cast<int>(s.uniform_int(t, 6));
        const ProbVector pt = random_probs(s, 2 * t, C, 0.0, 1.0);
        const ProbVector ps = random_probs(s, 2 * t + 1, C, 0.0, 1.0);
        const double gamma = s.uniform(80000 + t, 0.0, 3.0);
        CHECK(kl_focal(pt, ps, gamma).value >= 0.0);
    }
}

TEST_CASE("kl_focal with one-hot teacher reduces to summed focal_loss") {
    const rng::Stream s(8, "onehot");
    const double gammas[] = {0.0, 0.5, 2.0};
    for (int t = 0; t < 1000; ++t) {
        const int C = 1 + static_cast<int>(s.uniform_int(t, 10));
        const int hot = static_cast<int>(s.uniform_int(40000 + t, C));
        std::vector<double> onehot(C, 0.0);
        onehot[hot] = 1.0;
        const ProbVector pt(onehot);
        const ProbVector ps = random_probs(s, t, C, 0.001, 0.999);
        const double gamma = gammas[s.uniform_int(70000 + t, 3)];

        double focal_sum = 0.0;
        for (int c = 0; c < C; ++c) focal_sum += focal_loss(ps[c], c == hot ? 1 : 0, gamma).value;
        CHECK(std::abs(kl_focal(pt, ps, gamma).value - focal_sum) <= 1e-9);
    }
}

TEST_CASE("kl_focal gradient: detached weights match finite differences") {
    const rng::Stream s(9, "klgrad");
    for (int t = 0; t < 500; ++t) {
        const int C = 1 + static_cast<int>(s.uniform_int(t, 5));
        const ProbVector pt = random_probs(s, 3 * t, C);
        std::vector<double> z(C);
        for (int c = 0; c < C; ++c) z[c] = s.uniform(100000 + t * 16 + c, -3.0, 3.0);
        const double gamma = s.uniform(200000 + t, 0.0, 2.5);

        auto student = [&] {
            std::vector<double> v(C);
            for (int c = 0; c < C; ++c) v[c] = sigmoid(z[c]);
            return ProbVector(std::move(v));
        };
        std::vector<double> w(C);
        {
            const ProbVector ps = student();
            for (int c = 0; c < C; ++c)
                w[c] = std::pow(std::abs(pt[c] - clamp_prob(ps[c])), gamma);
        }
        const LossValue lv = kl_focal_weighted(pt, student(), w);
        for (int c = 0; c < C; ++c) {
            const double numeric =
                central_diff([&] { return kl_focal_weighted(pt, student(), w).value; }, z[c]);
            CHECK(grad_close(lv.grad[c], numeric));
        }
    }
}

TEST_CASE("kl_focal gradient at gamma 0 matches finite differences directly") {
    const rng::Stream s(10, "klg0");
    for (int t = 0; t < 200; ++t) {
        const int C = 2;
        const ProbVector pt = random_probs(s, 2 * t, C);
        std::vector<double> z(C);
        for (int c = 0; c < C; ++c) z[c] = s.uniform(300000 + t * 8 + c, -3.0, 3.0);
        auto student = [&] {
            std::vector<double> v(C);
            for (int c = 0; c < C; ++c) v[c] = sigmoid(z[c]);
            return ProbVector(std::move(v));
        };
        const LossValue lv = kl_focal(pt, student(), 0.0);
        for (int c = 0; c < C; ++c) {
            const double numeric =
                central_diff([&] { return kl_focal(pt, student(), 0.0).value; }, z[c]);
            CHECK(grad_close(lv.grad[c], numeric));
        }
    }
}

TEST_CASE("soft_lp values and gradients") {
    const ProbVector pt({0.8, 0.2});
    const ProbVector ps({0.5, 0.5});
    CHECK(soft_lp(pt, ps, 1).value == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(soft_lp(pt, ps, 2).value == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(soft_lp(pt, pt, 1).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(soft_lp(pt, ProbVector({0.5}), 1), std::invalid_argument);
    CHECK_THROWS_AS(soft_lp(pt, ps, 3), std::invalid_argument);

    const rng::Stream s(11, "lp");
    for (int t = 0; t < 500; ++t) {
        const int C = 1 + static_cast<int>(s.uniform_int(t, 4));
        const ProbVector teacher = random_probs(s, 2 * t, C);
        std::vector<double> z(C);
        for (int c = 0; c < C; ++c) z[c] = s.uniform(400000 + t * 8 + c, -3.0, 3.0);
        auto student = [&] {
            std::vector<double> v(C);
            for (int c = 0; c < C; ++c) v[c] = sigmoid(z[c]);
            return ProbVector(std::move(v));
        };
        for (int order : {1, 2}) {
            const LossValue lv = soft_lp(teacher, student(), order);
            for (int c = 0; c < C; ++c) {
                const double numeric =
                    central_diff([&] { return soft_lp(teacher, student(), order).value; }, z[c]);
                CHECK(grad_close(lv.grad[c], numeric));
            }
        }
    }
}

TEST_CASE("iou_loss values") {
    const Box b{0, 0, 2, 2};
    CHECK(iou_loss(b, b).value == doctest::Approx(0.0));
    CHECK(iou_loss(Box{0, 0, 1, 1}, Box{5, 5, 6, 6}).value == doctest::Approx(1.0));
    CHECK(iou_loss(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}).value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("iou_loss gradient matches finite differences") {
    const rng::Stream s(12, "ioug");
    int checked = 0;
    for (int t = 0; t < 2000 && checked < 1000; ++t) {
        // overlapping, non-touching pairs keep the loss smooth at the sample
        double coords[4];
        coords[0] = s.uniform(8 * t, 0.0, 4.0);
        coords[1] = s.uniform(8 * t + 1, 0.0, 4.0);
        coords[2] = coords[0] + s.uniform(8 * t + 2, 1.0, 4.0);
        coords[3] = coords[1] + s.uniform(8 * t + 3, 1.0, 4.0);
        const Box target{s.uniform(8 * t + 4, 0.0, 3.0), s.uniform(8 * t + 5, 0.0, 3.0), 0, 0};
        const Box tgt{target.x1, target.y1, target.x1 + s.uniform(8 * t + 6, 1.0, 4.0),
                      target.y1 + s.uniform(8 * t + 7, 1.0, 4.0)};
        Box pred{coords[0], coords[1], coords[2], coords[3]};
        if (iou(pred, tgt) < 0.05) continue;
        ++checked;

        const LossValue lv = iou_loss(pred, tgt);
        double* fields[4] = {&pred.x1, &pred.y1, &pred.x2, &pred.y2};
        for (int k = 0; k < 4; ++k) {
            const double numeric =
                central_diff([&] { return iou_loss(pred, tgt).value; }, *fields[k]);
            CHECK(grad_close(lv.grad[k], numeric));
        }
    }
    CHECK(checked >= 500);
}

TEST_CASE("select_loc_distill threshold behavior") {
    const Box gt{0, 0, 2, 2};
    CHECK(select_loc_distill({gt}, {gt}) == std::vector<int>{0});
    CHECK(select_loc_distill({Box{10, 10, 12, 12}}, {gt}).empty());
    CHECK(select_loc_distill({Box{0, 0, 2, 2}}, {Box{1, 0, 3, 2}}).empty());  // IoU 1/3
    CHECK(select_loc_distill({gt}, {}).empty());
}

TEST_CASE("select_loc_distill is monotone in IoU with the nearest gt") {
    const Box gt{0, 0, 4, 4};
    const rng::Stream s(13, "sel");
    for (int t = 0; t < 100; ++t) {
        const double off = s.uniform(t, 0.0, 1.2);
        Box teacher{off, off, 4 + off, 4 + off};
        bool was_selected = !select_loc_distill({teacher}, {gt}).empty();
        // walk the box toward the gt: IoU only grows, selection never drops
        for (int step = 0; step < 8; ++step) {
            teacher.x1 *= 0.5;
            teacher.y1 *= 0.5;
            teacher.x2 = 4 + (teacher.x2 - 4) * 0.5;
            teacher.y2 = 4 + (teacher.y2 - 4) * 0.5;
            const bool now_selected = !select_loc_distill({teacher}, {gt}).empty();
            if (was_selected) CHECK(now_selected);
            was_selected = now_selected;
        }
    }
}

TEST_SUITE_END();
