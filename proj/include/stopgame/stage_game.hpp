#pragma once

// 2x4 zero-sum stage game: the defender picks a row (continue, stop) with a
// mixed stop probability; the attacker picks one of the four pure maps from
// its state to an action. Row player maximizes.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace stopgame {

/// payoff[a1][col] with a1 in {C=0, S=1} and col = 2*a2(s=0) + a2(s=1).
using StagePayoff = std::array<std::array<double, 4>, 2>;

struct StageSolution {
    double stop_prob = 0.0;                // defender's maximin probability of S
    std::array<double, 4> attacker{};      // minimizing column mixture
    double value = 0.0;
};

namespace detail {

inline double column_value(const StagePayoff& m, int col, double p) {
    return (1.0 - p) * m[0][static_cast<size_t>(col)] + p * m[1][static_cast<size_t>(col)];
}

inline double lower_envelope(const StagePayoff& m, double p) {
    double v = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c) v = std::min(v, column_value(m, c, p));
    return v;
}

}  // namespace detail

/// Maximizes the concave lower envelope over p by enumerating breakpoints.
inline StageSolution solve_stage_game(const StagePayoff& m) {
    double candidates[2 + 6];
    int count = 0;
    candidates[count++] = 0.0;
    candidates[count++] = 1.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double si = m[1][i] - m[0][i];
            const double sj = m[1][j] - m[0][j];
            const double denom = si - sj;
            if (denom == 0.0) continue;
            const double p = (m[0][j] - m[0][i]) / denom;
            if (p > 0.0 && p < 1.0) candidates[count++] = p;
        }
    StageSolution best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        const double v = detail::lower_envelope(m, candidates[k]);
        if (v > best.value || (v == best.value && candidates[k] < best.stop_prob)) {
            best.value = v;
            best.stop_prob = candidates[k];
        }
    }

    // Attacker mixture: a single active column if one is optimal on its own,
    // otherwise two active columns with opposite slopes mixed to flatten the
    // envelope at p.
    const double p = best.stop_prob;
    const double tol = 1e-12 * (1.0 + std::abs(best.value));
    int active[4];
    int n_active = 0;
    for (int c = 0; c < 4; ++c)
        if (detail::column_value(m, c, p) <= best.value + tol) active[n_active++] = c;
    for (int a = 0; a < n_active; ++a) {
        const int c = active[a];
        const double slope = m[1][c] - m[0][c];
        if ((p == 0.0 && slope <= 0.0) || (p == 1.0 && slope >= 0.0) || slope == 0.0) {
            best.attacker[static_cast<size_t>(c)] = 1.0;
            return best;
        }
    }
    for (int a = 0; a < n_active; ++a)
        for (int b = 0; b < n_active; ++b) {
            const int ci = active[a];
            const int cj = active[b];
            const double si = m[1][ci] - m[0][ci];
            const double sj = m[1][cj] - m[0][cj];
            if (si > 0.0 && sj < 0.0) {
                const double w = -sj / (si - sj);
                best.attacker[static_cast<size_t>(ci)] = w;
                best.attacker[static_cast<size_t>(cj)] = 1.0 - w;
                return best;
            }
        }
    best.attacker[static_cast<size_t>(active[0])] = 1.0;
    return best;
}

}  // namespace stopgame
