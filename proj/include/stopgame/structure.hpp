#pragma once

// Structural checks on grid solutions: threshold (upper-interval) stopping
// sets for both players, the attacker's state-1-stop / state-0-continue
// exclusion, and total positivity of the observation model.

#include <algorithm>
#include <string>
#include <vector>

#include "stopgame/belief_grid.hpp"
#include "stopgame/game.hpp"

namespace stopgame {

struct StructureReport {
    bool pass = true;
    std::vector<double> thresholds;  // per l (defender) or per (s, l) (attacker)
    std::vector<std::string> violations;

    void fail(std::string msg) {
        pass = false;
        violations.push_back(std::move(msg));
    }
};

namespace detail {

enum class Choice { Continue, Stop, Indifferent };

inline Choice classify(double gap, double tie_tol) {
    if (gap > tie_tol) return Choice::Stop;
    if (gap < -tie_tol) return Choice::Continue;
    return Choice::Indifferent;
}

/// Index of the first point of the trailing region free of `lower`, or
/// `size` if the last point is `lower`. Reports a violation if an `upper`
/// point appears before a later `lower` point.
inline int upper_interval_start(const std::vector<Choice>& choices, Choice lower, Choice upper, bool& ok) {
    int last_lower = -1;
    int first_upper = -1;
    for (int i = 0; i < static_cast<int>(choices.size()); ++i) {
        if (choices[static_cast<size_t>(i)] == lower) last_lower = i;
        if (choices[static_cast<size_t>(i)] == upper && first_upper < 0) first_upper = i;
    }
    ok = !(first_upper >= 0 && first_upper < last_lower);
    return last_lower + 1;
}

}  // namespace detail

/// Defender stopping sets must be upper intervals [alpha_l, 1] with
/// alpha_1 >= alpha_2 >= ... >= alpha_L up to one grid cell. A level that
/// never stops reports alpha_l = 1.
inline StructureReport check_threshold_structure(const BeliefGridSolution& sol, double tie_tol = 1e-9) {
    if (sol.player != Player::Defender) throw DomainError("check_threshold_structure: not a defender solution");
    StructureReport rep;
    const double cell = 1.0 / sol.grid.K;
    for (int l = 1; l <= sol.L; ++l) {
        std::vector<detail::Choice> ch(static_cast<size_t>(sol.grid.size()));
        for (int i = 0; i < sol.grid.size(); ++i) ch[static_cast<size_t>(i)] = detail::classify(sol.gap[sol.index(0, l, i)], tie_tol);
        bool ok = true;
        const int start = detail::upper_interval_start(ch, detail::Choice::Continue, detail::Choice::Stop, ok);
        if (!ok) rep.fail("l=" + std::to_string(l) + ": stopping set is not an upper interval");
        rep.thresholds.push_back(start >= sol.grid.size() ? 1.0 : sol.grid.point(start));
    }
    for (int l = 1; l < sol.L; ++l)
        if (rep.thresholds[static_cast<size_t>(l - 1)] < rep.thresholds[static_cast<size_t>(l)] - cell - 1e-12)
            rep.fail("alpha_" + std::to_string(l) + " < alpha_" + std::to_string(l + 1) + " by more than one cell");
    return rep;
}

/// Attacker structure against a defender stop probability that is
/// nondecreasing in b1 and reaches 1 at b1 = 1. `pi1` holds the defender's
/// stop probability per (l, grid point). In s=0 the continue set and in
/// s=1 the stop set must be upper intervals in the defender's stop
/// probability; wherever s=1 stops, s=0 must continue. Thresholds are the
/// defender stop probabilities at the interval starts, ordered s=0 then s=1.
inline StructureReport check_attacker_structure(const BeliefGridSolution& sol, const std::vector<double>& pi1,
                                                double tie_tol = 1e-9) {
    if (sol.player != Player::Attacker) throw DomainError("check_attacker_structure: not an attacker solution");
    const int G = sol.grid.size();
    if (static_cast<int>(pi1.size()) != sol.L * G) throw DomainError("check_attacker_structure: pi1 table size mismatch");
    for (int l = 1; l <= sol.L; ++l) {
        const double* row = &pi1[static_cast<size_t>((l - 1) * G)];
        for (int i = 1; i < G; ++i)
            if (row[i] < row[i - 1] - 1e-12)
                throw DomainError("check_attacker_structure: defender stop probability decreases in b1");
        if (row[G - 1] < 1.0 - 1e-9) throw DomainError("check_attacker_structure: defender must stop surely at b1 = 1");
    }
    StructureReport rep;
    rep.thresholds.assign(static_cast<size_t>(2 * sol.L), 1.0);
    for (int s = 0; s < 2; ++s)
        for (int l = 1; l <= sol.L; ++l) {
            const double* row = &pi1[static_cast<size_t>((l - 1) * G)];
            // Order the grid by the defender stop probability; ties keep b1 order.
            std::vector<detail::Choice> ch(static_cast<size_t>(G));
            for (int i = 0; i < G; ++i) ch[static_cast<size_t>(i)] = detail::classify(sol.gap[sol.index(s, l, i)], tie_tol);
            bool ok = true;
            int start = 0;
            if (s == 0) {
                start = detail::upper_interval_start(ch, detail::Choice::Stop, detail::Choice::Continue, ok);
                if (!ok) rep.fail("s=0, l=" + std::to_string(l) + ": continue set is not an upper interval");
            } else {
                start = detail::upper_interval_start(ch, detail::Choice::Continue, detail::Choice::Stop, ok);
                if (!ok) rep.fail("s=1, l=" + std::to_string(l) + ": stopping set is not an upper interval");
            }
            // Equal defender probabilities must get the same decision.
            for (int i = 1; i < G; ++i)
                if (row[i] == row[i - 1] && ch[static_cast<size_t>(i)] != detail::Choice::Indifferent &&
                    ch[static_cast<size_t>(i - 1)] != detail::Choice::Indifferent &&
                    ch[static_cast<size_t>(i)] != ch[static_cast<size_t>(i - 1)]) {
                    rep.fail("s=" + std::to_string(s) + ", l=" + std::to_string(l) +
                             ": decision differs at equal defender stop probability");
                    break;
                }
            rep.thresholds[static_cast<size_t>(s * sol.L + l - 1)] = start >= G ? 1.0 : row[start];
        }
    for (int l = 1; l <= sol.L; ++l)
        for (int i = 0; i < G; ++i)
            if (sol.gap[sol.index(1, l, i)] > tie_tol && sol.gap[sol.index(0, l, i)] > tie_tol) {
                rep.fail("l=" + std::to_string(l) + ", b=" + std::to_string(sol.grid.point(i)) +
                         ": stops in s=1 and starts in s=0");
                break;
            }
    return rep;
}

struct Tp2Report {
    bool pass = true;
    int violating_minors = 0;
};

/// Counts negative 2x2 minors pmf0[i] pmf1[j] - pmf0[j] pmf1[i] for i < j.
inline Tp2Report check_tp2(const ObservationModel& model, double tol = 0.0) {
    Tp2Report rep;
    const int n = model.size();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double minor = model.pmf0[static_cast<size_t>(i)] * model.pmf1[static_cast<size_t>(j)] -
                                 model.pmf0[static_cast<size_t>(j)] * model.pmf1[static_cast<size_t>(i)];
            if (minor < -tol) ++rep.violating_minors;
        }
    rep.pass = rep.violating_minors == 0;
    return rep;
}

}  // namespace stopgame
