#include <doctest.h>

#include <cmath>

#include "lad/geometry.hpp"
#include "lad/rng.hpp"

using namespace lad;

namespace {

Box random_box(const rng::Stream& s, std::uint64_t ctr, double span = 10.0) {
    const double x1 = s.uniform(4 * ctr, 0.0, span);
    const double y1 = s.uniform(4 * ctr + 1, 0.0, span);
    const double w = s.uniform(4 * ctr + 2, 0.1, span);
    const double h = s.uniform(4 * ctr + 3, 0.1, span);
    return Box{x1, y1, x1 + w, y1 + h};
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("iou basics") {
    CHECK(iou(Box{0, 0, 2, 2}, Box{0, 0, 2, 2}) == doctest::Approx(1.0));
    CHECK(iou(Box{0, 0, 1, 1}, Box{5, 5, 6, 6}) == doctest::Approx(0.0));
    CHECK(iou(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou degenerate inputs give 0, never NaN") {
    const Box point{1, 1, 1, 1};
    CHECK(iou(point, point) == 0.0);
    CHECK(iou(point, Box{0, 0, 2, 2}) == 0.0);  // zero-area box inside a real one
    CHECK(std::isfinite(iou(Box{0, 0, 0, 5}, Box{0, 0, 5, 0})));
}

TEST_CASE("iou symmetry, identity, translation invariance") {
    const rng::Stream s(3, "geo");
    for (int t = 0; t < 200; ++t) {
        const Box a = random_box(s, 2 * t);
        const Box b = random_box(s, 2 * t + 1);
        CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-12));
        CHECK(iou(a, a) == doctest::Approx(1.0));
        const double dx = s.uniform(100000 + t, -5.0, 5.0);
        const double dy = s.uniform(200000 + t, -5.0, 5.0);
        const Box at{a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy};
        const Box bt{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
        CHECK(iou(at, bt) == doctest::Approx(iou(a, b)).epsilon(1e-9));
        const double v = iou(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("generate_anchors single cell") {
    const AnchorGrid g = generate_anchors({LevelSpec{4.0, 4.0, 1, 1}});
    REQUIRE(g.size() == 1);
    CHECK(g.anchors[0].box.x1 == doctest::Approx(0.0));
    CHECK(g.anchors[0].box.y1 == doctest::Approx(0.0));
    CHECK(g.anchors[0].box.x2 == doctest::Approx(4.0));
    CHECK(g.anchors[0].box.y2 == doctest::Approx(4.0));
}

TEST_CASE("generate_anchors centers and ordering") {
    const AnchorGrid g = generate_anchors({LevelSpec{4.0, 4.0, 2, 2}});
    REQUIRE(g.size() == 4);
    // row-major: (2,2),(6,2),(2,6),(6,6)
    CHECK(g.anchors[0].box.cx() == doctest::Approx(2.0));
    CHECK(g.anchors[0].box.cy() == doctest::Approx(2.0));
    CHECK(g.anchors[1].box.cx() == doctest::Approx(6.0));
    CHECK(g.anchors[1].box.cy() == doctest::Approx(2.0));
    CHECK(g.anchors[2].box.cx() == doctest::Approx(2.0));
    CHECK(g.anchors[2].box.cy() == doctest::Approx(6.0));
    CHECK(g.anchors[3].box.cx() == doctest::Approx(6.0));
    CHECK(g.anchors[3].box.cy() == doctest::Approx(6.0));
}

TEST_CASE("generate_anchors level-major order and determinism") {
    const std::vector<LevelSpec> spec{LevelSpec{8.0, 8.0, 1, 1}, LevelSpec{16.0, 16.0, 1, 1}};
    const AnchorGrid g = generate_anchors(spec);
    REQUIRE(g.size() == 2);
    CHECK(g.anchors[0].level == 0);
    CHECK(g.anchors[1].level == 1);
    CHECK(g.anchors[0].id == 0);
    CHECK(g.anchors[1].id == 1);

    const AnchorGrid g2 = generate_anchors(spec);
    for (int i = 0; i < g.size(); ++i) {
        CHECK(g.anchors[i].box.x1 == g2.anchors[i].box.x1);
        CHECK(g.anchors[i].box.y2 == g2.anchors[i].box.y2);
    }
}

TEST_CASE("generate_anchors rejects bad specs") {
    CHECK_THROWS_AS(generate_anchors({}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({LevelSpec{0.0, 4.0, 1, 1}}), std::invalid_argument);
}

TEST_CASE("nms basics") {
    CHECK(nms({{Box{0, 0, 1, 1}, 0.5}}, 0.5) == std::vector<int>{0});

    // full overlap: higher score wins
    const std::vector<std::pair<Box, double>> same{{Box{0, 0, 2, 2}, 0.9}, {Box{0, 0, 2, 2}, 0.8}};
    CHECK(nms(same, 0.5) == std::vector<int>{0});

    // IoU 1/3 < 0.5: both kept, descending score
    const std::vector<std::pair<Box, double>> pair{{Box{0, 0, 2, 2}, 0.9}, {Box{1, 0, 3, 2}, 0.8}};
    CHECK(nms(pair, 0.5) == std::vector<int>{0, 1});

    CHECK(nms({}, 0.5).empty());
}

TEST_CASE("nms kept set has pairwise IoU <= threshold") {
    const rng::Stream s(17, "nms");
    for (int t = 0; t < 50; ++t) {
        std::vector<std::pair<Box, double>> dets;
        const int n = 2 + static_cast<int>(s.uniform_int(1000 + t, 10));
        for (int i = 0; i < n; ++i)
            dets.emplace_back(random_box(s, 100 * t + i, 6.0), s.uniform(5000 + 100 * t + i));
        const double thr = s.uniform(9000 + t, 0.1, 0.9);
        const auto kept = nms(dets, thr);
        for (std::size_t i = 0; i < kept.size(); ++i)
            for (std::size_t j = i + 1; j < kept.size(); ++j)
                CHECK(iou(dets[kept[i]].first, dets[kept[j]].first) <= thr + 1e-12);
        // kept scores are in descending order
        for (std::size_t i = 1; i < kept.size(); ++i)
            CHECK(dets[kept[i - 1]].second >= dets[kept[i]].second);
    }
}

TEST_SUITE_END();
