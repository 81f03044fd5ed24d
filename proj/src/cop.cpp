#include "lad/cop.hpp"

#include <stdexcept>

namespace lad {

int neighbor_index(int row, int col, int k, int rows, int cols) {
    const int r = row + k / 3 - 1;
    const int c = col + k % 3 - 1;
    if (r < 0 || r >= rows || c < 0 || c >= cols) return -1;
    return r * cols + c;
}

std::vector<ProbVector> cop_fuse(const std::vector<ProbVector>& class_probs,
                                 const ObjectnessField& objectness, int rows, int cols) {
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (class_probs.size() != n || objectness.values.size() != n)
        throw std::invalid_argument("cop_fuse: grid size mismatch");
    const std::size_t num_classes = n == 0 ? 0 : class_probs[0].size();

    std::vector<ProbVector> fused;
    fused.reserve(n);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cols + c;
            if (class_probs[i].size() != num_classes)
                throw std::invalid_argument("cop_fuse: ragged class probabilities");
            std::vector<double> acc(num_classes, 0.0);
            for (int k = 0; k < 9; ++k) {
                const int j = neighbor_index(r, c, k, rows, cols);
                if (j < 0) continue;  // zero padding
                const double o = objectness.values[i][k];
                for (std::size_t cc = 0; cc < num_classes; ++cc)
                    acc[cc] += o * class_probs[j][cc];
            }
            for (double& v : acc) v /= 9.0;
            fused.emplace_back(std::move(acc));
        }
    }
    return fused;
}

std::vector<ProbVector> iop_fuse(const std::vector<ProbVector>& class_probs,
                                 const std::vector<double>& objectness) {
    if (class_probs.size() != objectness.size())
        throw std::invalid_argument("iop_fuse: size mismatch");
    std::vector<ProbVector> fused;
    fused.reserve(class_probs.size());
    for (std::size_t i = 0; i < class_probs.size(); ++i) {
        std::vector<double> acc(class_probs[i].size());
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] = objectness[i] * class_probs[i][c];
        fused.emplace_back(std::move(acc));
    }
    return fused;
}

void cop_fuse_backward(const std::vector<std::vector<double>>& grad_fused,
                       const std::vector<ProbVector>& class_probs,
                       const ObjectnessField& objectness, int rows, int cols,
                       std::vector<std::vector<double>>& grad_class_logits,
                       std::vector<std::array<double, 9>>& grad_obj_logits) {
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::size_t num_classes = n == 0 ? 0 : class_probs[0].size();
    grad_class_logits.assign(n, std::vector<double>(num_classes, 0.0));
    grad_obj_logits.assign(n, {});

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cols + c;
            for (int k = 0; k < 9; ++k) {
                const int j = neighbor_index(r, c, k, rows, cols);
                if (j < 0) continue;
                const double o = objectness.values[i][k];
                double go = 0.0;
                for (std::size_t cc = 0; cc < num_classes; ++cc) {
                    const double g = grad_fused[i][cc] / 9.0;
                    const double pj = class_probs[j][cc];
                    grad_class_logits[j][cc] += g * o * pj * (1.0 - pj);
                    go += g * pj;
                }
                grad_obj_logits[i][k] += go * o * (1.0 - o);
            }
        }
    }
}

void iop_fuse_backward(const std::vector<std::vector<double>>& grad_fused,
                       const std::vector<ProbVector>& class_probs,
                       const std::vector<double>& objectness,
                       std::vector<std::vector<double>>& grad_class_logits,
                       std::vector<double>& grad_obj_logits) {
    const std::size_t n = class_probs.size();
    const std::size_t num_classes = n == 0 ? 0 : class_probs[0].size();
    grad_class_logits.assign(n, std::vector<double>(num_classes, 0.0));
    grad_obj_logits.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const double o = objectness[i];
        double go = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            const double p = class_probs[i][c];
            grad_class_logits[i][c] = grad_fused[i][c] * o * p * (1.0 - p);
            go += grad_fused[i][c] * p;
        }
        grad_obj_logits[i] = go * o * (1.0 - o);
    }
}

}  // namespace lad
