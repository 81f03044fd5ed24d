#include "lad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lad {

bool box_valid(const Box& b) {
    return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
           std::isfinite(b.y2) && b.x1 <= b.x2 && b.y1 <= b.y2;
}

double iou(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

AnchorGrid generate_anchors(const std::vector<LevelSpec>& levels) {
    if (levels.empty()) throw std::invalid_argument("generate_anchors: empty level list");
    AnchorGrid grid;
    grid.levels = levels;
    int id = 0;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const LevelSpec& lv = levels[li];
        if (!(lv.stride > 0.0) || !(lv.scale > 0.0) || lv.rows <= 0 || lv.cols <= 0)
            throw std::invalid_argument("generate_anchors: stride, scale, rows, cols must be > 0");
        grid.level_offsets.push_back(id);
        const double half = 0.5 * lv.scale;
        for (int r = 0; r < lv.rows; ++r) {
            for (int c = 0; c < lv.cols; ++c) {
                const double cx = (c + 0.5) * lv.stride;
                const double cy = (r + 0.5) * lv.stride;
                Anchor a;
                a.box = Box{cx - half, cy - half, cx + half, cy + half};
                a.level = static_cast<int>(li);
                a.row = r;
                a.col = c;
                a.id = id++;
                grid.anchors.push_back(a);
            }
        }
    }
    return grid;
}

std::vector<int> nms(const std::vector<std::pair<Box, double>>& dets, double iou_threshold) {
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dets[a].second != dets[b].second) return dets[a].second > dets[b].second;
        return a < b;
    });
    std::vector<int> kept;
    std::vector<char> suppressed(dets.size(), 0);
    for (int i : order) {
        if (suppressed[i]) continue;
        kept.push_back(i);
        for (int j : order) {
            if (j == i || suppressed[j]) continue;
            if (iou(dets[i].first, dets[j].first) > iou_threshold) suppressed[j] = 1;
        }
    }
    return kept;
}

}  // namespace lad
