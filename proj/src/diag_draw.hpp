#pragma once

// Diagonal conditional  f(w) ∝ w^n exp{-(n/2) s_jj w^2 - c1 w},  c1 = gamma_j + n b_j.
// Shared between the two samplers; kept out of the public headers.

#include <algorithm>
#include <cmath>
#include <limits>

#include "bconcord/rng.hpp"

namespace bconcord::detail {

constexpr int kDiagGrid = 512;

// Rationalized positive root of  n*s_jj*w^2 + c1*w - n = 0; stable for
// either sign of c1.
inline double diag_mode_root(double c1, double sjj, double n) {
    return 2.0 * n / (c1 + std::sqrt(c1 * c1 + 4.0 * n * n * sjj));
}

inline double draw_diag_discretized(double c1, double sjj, int n, double mode,
                                    SeededRng& rng) {
    // atoms at log-spaced points, weighted by density * local cell width
    const double lo = std::log(mode / 8.0);
    const double step = std::log(64.0) / (kDiagGrid - 1);
    double logw[kDiagGrid];
    double grid[kDiagGrid];
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kDiagGrid; ++i) {
        const double lg = lo + i * step;
        const double g = std::exp(lg);
        grid[i] = g;
        logw[i] = n * lg - 0.5 * n * sjj * g * g - c1 * g + lg;
        mx = std::max(mx, logw[i]);
    }
    double total = 0.0;
    for (int i = 0; i < kDiagGrid; ++i) {
        logw[i] = std::exp(logw[i] - mx);
        total += logw[i];
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < kDiagGrid; ++i) {
        acc += logw[i];
        if (acc >= target) return grid[i];
    }
    return grid[kDiagGrid - 1];
}

}  // namespace bconcord::detail
