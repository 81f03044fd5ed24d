#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

// Central finite differences for gradient verification. f is re-evaluated
// with the referenced variable displaced by +/- h.
template <typename F>
double central_diff(F&& f, double& x, double h = 1e-6) {
    const double orig = x;
    x = orig + h;
    const double fp = f();
    x = orig - h;
    const double fm = f();
    x = orig;
    return (fp - fm) / (2.0 * h);
}

// Relative comparison with an absolute floor of 1 so near-zero gradients
// are judged absolutely.
inline bool grad_close(double analytic, double numeric, double tol = 1e-4) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) <= tol * scale;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
