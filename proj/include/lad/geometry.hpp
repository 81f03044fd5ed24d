#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace lad {

// Axis-aligned box, corner parameterized, continuous coordinates.
// Valid when x1 <= x2, y1 <= y2 and all coordinates are finite.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
};

bool box_valid(const Box& b);

// Intersection-over-union in [0,1]. Zero-area inputs are legal and any
// degenerate case (empty intersection, zero union) yields 0, never NaN.
double iou(const Box& a, const Box& b);

struct Anchor {
    Box box;
    int level = 0;
    int row = 0;
    int col = 0;
    int id = 0;
};

struct LevelSpec {
    double stride = 0.0;  // grid cell pitch in canvas units
    double scale = 0.0;   // anchor side length in canvas units
    int rows = 0;
    int cols = 0;
};

struct AnchorGrid {
    std::vector<LevelSpec> levels;
    std::vector<Anchor> anchors;  // level-major, then row-major

    // Flat anchor index for (level, row, col); anchors[offset].id == offset.
    std::vector<int> level_offsets;

    int size() const { return static_cast<int>(anchors.size()); }
};

// Square anchors of side `scale` centered at ((col+0.5)*stride, (row+0.5)*stride).
// Deterministic: identical spec produces identical anchors.
AnchorGrid generate_anchors(const std::vector<LevelSpec>& levels);

// Greedy NMS over (box, score) pairs. Returns kept indices in descending
// score order; equal scores are broken by lower original index. A detection
// is suppressed when its IoU with an already kept one exceeds the threshold.
std::vector<int> nms(const std::vector<std::pair<Box, double>>& dets, double iou_threshold);

}  // namespace lad
