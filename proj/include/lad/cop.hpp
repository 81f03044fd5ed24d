#pragma once

#include <array>
#include <vector>

#include "lad/losses.hpp"

namespace lad {

// Per-anchor objectness over the 3x3 neighborhood, post-sigmoid, row-major
// (k=0 is the upper-left neighbor, k=4 the anchor itself).
struct ObjectnessField {
    std::vector<std::array<double, 9>> values;  // one entry per anchor
};

// Neighbor flat index of anchor (row,col) for window position k, or -1
// when the neighbor falls outside the rows x cols grid.
int neighbor_index(int row, int col, int k, int rows, int cols);

// Conditional objectness fusion on one grid level:
//   fused[i][c] = (1/9) * sum_k o[i][k] * p[nbr_k(i)][c],
// with zero padding outside the grid and the divisor fixed at 9.
std::vector<ProbVector> cop_fuse(const std::vector<ProbVector>& class_probs,
                                 const ObjectnessField& objectness, int rows, int cols);

// Single-objectness variant: fused[i][c] = o[i] * p[i][c].
std::vector<ProbVector> iop_fuse(const std::vector<ProbVector>& class_probs,
                                 const std::vector<double>& objectness);

// Backward passes: given dL/d(fused), accumulate dL/d(class logits) and
// dL/d(objectness logits). Probabilities are the forward inputs; sigmoid
// derivatives are applied internally.
void cop_fuse_backward(const std::vector<std::vector<double>>& grad_fused,
                       const std::vector<ProbVector>& class_probs,
                       const ObjectnessField& objectness, int rows, int cols,
                       std::vector<std::vector<double>>& grad_class_logits,
                       std::vector<std::array<double, 9>>& grad_obj_logits);

void iop_fuse_backward(const std::vector<std::vector<double>>& grad_fused,
                       const std::vector<ProbVector>& class_probs,
                       const std::vector<double>& objectness,
                       std::vector<std::vector<double>>& grad_class_logits,
                       std::vector<double>& grad_obj_logits);

}  // namespace lad
