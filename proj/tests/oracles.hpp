#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "prunelab/processes.hpp"
#include "prunelab/pwl.hpp"

namespace oracle {

// Minimax affine fit on three points by LP vertex enumeration: the optimum
// of min e s.t. |h_j - (a t_j + b)| <= e is attained where three of the six
// inequality constraints are active; enumerate the sign patterns, solve each
// 3x3 system, keep the best feasible vertex.
inline double minimax_lp(const std::array<double, 3>& t, const std::array<double, 3>& h) {
    double best = std::numeric_limits<double>::infinity();
    // signs s_j: h_j - a t_j - b = s_j * e
    for (int pattern = 0; pattern < 8; ++pattern) {
        const double s0 = (pattern & 1) ? 1.0 : -1.0;
        const double s1 = (pattern & 2) ? 1.0 : -1.0;
        const double s2 = (pattern & 4) ? 1.0 : -1.0;
        // Solve: a t_j + b + s_j e = h_j for (a, b, e).
        const double m[3][4] = {{t[0], 1.0, s0, h[0]},
                                {t[1], 1.0, s1, h[1]},
                                {t[2], 1.0, s2, h[2]}};
        double aug[3][4];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j)
                aug[i][j] = m[i][j];
        // Gaussian elimination with partial pivoting.
        bool singular = false;
        for (int col = 0; col < 3 && !singular; ++col) {
            int piv = col;
            for (int row = col + 1; row < 3; ++row)
                if (std::abs(aug[row][col]) > std::abs(aug[piv][col]))
                    piv = row;
            if (std::abs(aug[piv][col]) < 1e-14) {
                singular = true;
                break;
            }
            std::swap(aug[col], aug[piv]);
            for (int row = 0; row < 3; ++row) {
                if (row == col)
                    continue;
                const double f = aug[row][col] / aug[col][col];
                for (int j = col; j < 4; ++j)
                    aug[row][j] -= f * aug[col][j];
            }
        }
        if (singular)
            continue;
        const double a = aug[0][3] / aug[0][0];
        const double b = aug[1][3] / aug[1][1];
        const double e = aug[2][3] / aug[2][2];
        if (e < -1e-12)
            continue;
        // Feasibility: every point within |.| <= e (they are active here by
        // construction, so this guards rounding only).
        bool ok = true;
        for (int j = 0; j < 3; ++j)
            if (std::abs(h[j] - (a * t[j] + b)) > std::abs(e) + 1e-9)
                ok = false;
        if (ok)
            best = std::min(best, std::abs(e));
    }
    return best;
}

// Dense-grid maximum of |h| on [a, b].
inline double grid_sup_abs(const prunelab::Pwl1D& h, double a, double b, int n = 10000) {
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = a + (b - a) * i / n;
        best = std::max(best, std::abs(h.value(t)));
    }
    return best;
}

// Exhaustive triple search over an n-point grid inside the bin; the
// independent check for the broken-bin predicate.
inline double grid_triple_max(const prunelab::Pwl1D& h, double lo, double hi, int n = 200) {
    std::vector<double> ts(static_cast<std::size_t>(n));
    std::vector<double> vs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ts[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
        vs[static_cast<std::size_t>(i)] = h.value(ts[static_cast<std::size_t>(i)]);
    }
    double best = 0.0;
    for (int i = 0; i + 2 < n; ++i) {
        for (int j = i + 1; j + 1 < n; ++j) {
            const double dt = ts[static_cast<std::size_t>(j)] - ts[static_cast<std::size_t>(i)];
            for (int k = j + 1; k < n; ++k) {
                const double l13 =
                    vs[static_cast<std::size_t>(i)] +
                    (vs[static_cast<std::size_t>(k)] - vs[static_cast<std::size_t>(i)]) * dt /
                        (ts[static_cast<std::size_t>(k)] - ts[static_cast<std::size_t>(i)]);
                best = std::max(best, 0.5 * std::abs(vs[static_cast<std::size_t>(j)] - l13));
            }
        }
    }
    return best;
}

// Pr(B_k = 0) of the (q,p,T) chain by exhaustive path enumeration.
inline double bd_enumerate_state0(const prunelab::ChainParams& params, int k) {
    double total = 0.0;
    std::function<void(int, int, double)> walk = [&](int state, int steps_left, double prob) {
        if (steps_left == 0) {
            if (state == 0)
                total += prob;
            return;
        }
        const double up = state < params.t_cap ? params.p : 0.0;
        const double down = state > 0 ? params.q : 0.0;
        if (up > 0.0)
            walk(state + 1, steps_left - 1, prob * up);
        if (down > 0.0)
            walk(state - 1, steps_left - 1, prob * down);
        const double stay = 1.0 - up - down;
        if (stay > 0.0)
            walk(state, steps_left - 1, prob * stay);
    };
    walk(1, k, 1.0);
    return total;
}

// Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Asymptotic KS critical value at significance alpha.
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline double cauchy_cdf(double x) { return 0.5 + std::atan(x) / std::numbers::pi; }

} // namespace oracle
