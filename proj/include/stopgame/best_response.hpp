#pragma once

// Best responses by value iteration on the belief grid.
//
// The defender's best response against a fixed attacker is a POMDP over
// (l, b1); the attacker's best response against a fixed defender is an MDP
// over (s, l, b1) in which b1 is the defender's filter, driven by the
// attacker model the defender holds. Both use Jacobi sweeps with transition
// data precomputed per cell, since posteriors do not depend on the values.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stopgame/belief_grid.hpp"
#include "stopgame/game.hpp"
#include "stopgame/simulate.hpp"
#include "stopgame/strategies.hpp"

namespace stopgame {

template <class P>
bool policy_uses_belief(const P& p) {
    if constexpr (requires { p.uses_belief(); })
        return p.uses_belief();
    else
        return true;
}

namespace detail {

struct Edge {
    double prob = 0.0;
    std::uint32_t lo = 0;  // value index of the left grid neighbor
    double weight = 0.0;   // weight of lo + stride
};

/// Immediate expected defender reward given the attacker's stop probabilities.
inline double expected_reward(double b1, int l, Action a1, double q0, double q1, const GameConfig& cfg) {
    const double r0 = (1.0 - q0) * reward(State::NoIntrusion, l, {a1, Action::Continue}, cfg) +
                      q0 * reward(State::NoIntrusion, l, {a1, Action::Stop}, cfg);
    const double r1 = (1.0 - q1) * reward(State::Intrusion, l, {a1, Action::Continue}, cfg) +
                      q1 * reward(State::Intrusion, l, {a1, Action::Stop}, cfg);
    return (1.0 - b1) * r0 + b1 * r1;
}

/// Posterior after (a1, o), reset by likelihood when the observation is impossible.
inline double safe_posterior(double b1, Action a1, int o, double q0, double q1, int l, const GameConfig& cfg) {
    try {
        return belief_update(b1, a1, o, q0, q1, l, cfg);
    } catch (const FilterDegenerate&) {
        return reset_belief(b1, o, cfg);
    }
}

template <class Sweep>
void run_sweeps(BeliefGridSolution& sol, const ViOptions& opt, Sweep&& sweep) {
    std::vector<double> next(sol.values.size(), 0.0);
    const int limit = opt.fixed_sweeps > 0 ? opt.fixed_sweeps : opt.max_sweeps;
    sol.residuals.clear();
    sol.converged = false;
    for (int k = 1; k <= limit; ++k) {
        sweep(sol.values, next);
        double res = 0.0;
        for (size_t c = 0; c < next.size(); ++c) res = std::max(res, std::abs(next[c] - sol.values[c]));
        sol.values.swap(next);
        sol.residuals.push_back(res);
        sol.residual = res;
        sol.iterations = k;
        if (opt.fixed_sweeps <= 0 && res <= opt.tol) {
            sol.converged = true;
            return;
        }
    }
    sol.converged = opt.fixed_sweeps > 0;
}

}  // namespace detail

/// Defender best response to a fixed attacker behavior.
template <AttackerPolicy A>
BeliefGridSolution defender_best_response_vi(const A& attacker, const GameConfig& cfg, const BeliefGrid& grid,
                                             const ViOptions& opt = {}) {
    cfg.validate();
    BeliefGridSolution sol;
    sol.player = Player::Defender;
    sol.L = cfg.L;
    sol.grid = grid;
    const int n = cfg.num_obs();
    sol.contexts = attacker.uses_observation() ? n : 1;
    sol.allocate();

    const size_t cells = sol.values.size();
    const size_t stride = static_cast<size_t>(sol.contexts);
    std::vector<double> rew(2 * cells);
    std::vector<std::uint32_t> offset(2 * cells + 1, 0);
    std::vector<detail::Edge> edges;
    edges.reserve(2 * cells * static_cast<size_t>(n));

    for (int l = 1; l <= cfg.L; ++l)
        for (int i = 0; i < grid.size(); ++i)
            for (int o = 0; o < sol.contexts; ++o) {
                const size_t c = sol.index(0, l, i, o);
                const double b = grid.point(i);
                const auto q = attacker.stop_probs(l, b, sol.contexts > 1 ? o : -1);
                for (int a = 0; a < 2; ++a) {
                    const Action a1 = action_from(a);
                    rew[2 * c + a] = detail::expected_reward(b, l, a1, q[0], q[1], cfg);
                    const int next_l = stops_after(l, a1);
                    if (next_l >= 1) {
                        const auto mass = predicted_state_mass(b, a1, q[0], q[1], l, cfg);
                        for (int op = 0; op < n; ++op) {
                            const double m0 = mass[0] * cfg.obs.pmf0[static_cast<size_t>(op)];
                            const double m1 = mass[1] * cfg.obs.pmf1[static_cast<size_t>(op)];
                            const double p = m0 + m1;
                            if (!(p > 0.0)) continue;
                            const auto cell = grid.locate(m1 / p);
                            const int ctx = sol.contexts > 1 ? op : 0;
                            edges.push_back({p, static_cast<std::uint32_t>(sol.index(0, next_l, cell.index, ctx)),
                                             cell.weight});
                        }
                    }
                    offset[2 * c + a + 1] = static_cast<std::uint32_t>(edges.size());
                }
            }

    const double gamma = cfg.gamma;
    const int workers = worker_count();
    detail::run_sweeps(sol, opt, [&](const std::vector<double>& v, std::vector<double>& out) {
        parallel_for(static_cast<int>(cells), workers, [&](int ci) {
            const size_t c = static_cast<size_t>(ci);
            double q[2];
            for (int a = 0; a < 2; ++a) {
                double cont = 0.0;
                for (std::uint32_t e = offset[2 * c + a]; e < offset[2 * c + a + 1]; ++e) {
                    const auto& ed = edges[e];
                    const double lo = v[ed.lo];
                    cont += ed.prob * (ed.weight == 0.0 ? lo : lo + ed.weight * (v[ed.lo + stride] - lo));
                }
                q[a] = rew[2 * c + a] + gamma * cont;
            }
            out[c] = std::max(q[0], q[1]);
            sol.gap[c] = q[1] - q[0];
        });
    });
    return sol;
}

namespace detail {

/// Attacker-side value iteration. With `actor` null the attacker optimizes;
/// otherwise the given attacker behavior is evaluated. Values are in the
/// attacker's reward (the negated defender reward).
template <DefenderPolicy D, AttackerPolicy F, AttackerPolicy Act>
BeliefGridSolution attacker_vi(const D& defender, const F& filter, const Act* actor, const GameConfig& cfg,
                               const BeliefGrid& requested_grid, const ViOptions& opt) {
    cfg.validate();
    BeliefGridSolution sol;
    sol.player = Player::Attacker;
    sol.L = cfg.L;
    const bool belief_matters = policy_uses_belief(defender) || (actor != nullptr && policy_uses_belief(*actor));
    sol.grid = belief_matters ? requested_grid : BeliefGrid(1);
    const BeliefGrid& grid = sol.grid;
    const int n = cfg.num_obs();
    const bool with_obs =
        defender.uses_observation() || filter.uses_observation() || (actor != nullptr && actor->uses_observation());
    sol.contexts = with_obs ? n : 1;
    sol.allocate();

    const size_t layer = static_cast<size_t>(cfg.L) * grid.size() * sol.contexts;
    const size_t stride = static_cast<size_t>(sol.contexts);

    // Filter posteriors per (l, i, o, a1, o'), shared by both attacker states.
    std::vector<Edge> post(layer * 2 * static_cast<size_t>(n));
    std::vector<double> stop1(2 * layer);                 // defender stop prob per (s, cell)
    std::vector<std::array<double, 2>> acts(2 * layer);   // evaluated attacker stop probs per (s, cell)
    for (int l = 1; l <= cfg.L; ++l)
        for (int i = 0; i < grid.size(); ++i)
            for (int o = 0; o < sol.contexts; ++o) {
                const size_t c = sol.index(0, l, i, o);
                const double b = grid.point(i);
                const int seen = with_obs ? o : -1;
                const auto qf = filter.stop_probs(l, b, seen);
                for (int s = 0; s < 2; ++s) {
                    stop1[s * layer + c] = defender.stop_prob(DefenderView{l, b, seen, s == 1});
                    if (actor != nullptr) acts[s * layer + c] = actor->stop_probs(l, b, seen);
                }
                for (int a = 0; a < 2; ++a) {
                    const Action a1 = action_from(a);
                    const int next_l = stops_after(l, a1);
                    for (int op = 0; op < n; ++op) {
                        Edge& e = post[(c * 2 + static_cast<size_t>(a)) * n + static_cast<size_t>(op)];
                        if (next_l < 1) continue;
                        const double bn = safe_posterior(b, a1, op, qf[0], qf[1], l, cfg);
                        const auto cell = grid.locate(bn);
                        e.prob = 1.0;
                        e.lo = static_cast<std::uint32_t>(sol.index(0, next_l, cell.index, with_obs ? op : 0));
                        e.weight = cell.weight;
                    }
                }
            }

    // Transition and reward tables per (s, l, a1, a2).
    auto tindex = [&](int s, int l, int a1, int a2) { return ((static_cast<size_t>(s) * cfg.L + (l - 1)) * 2 + a1) * 2 + a2; };
    std::vector<std::array<double, 3>> trans(static_cast<size_t>(2 * cfg.L * 4));
    std::vector<double> rew(trans.size());
    for (int s = 0; s < 2; ++s)
        for (int l = 1; l <= cfg.L; ++l)
            for (int a1 = 0; a1 < 2; ++a1)
                for (int a2 = 0; a2 < 2; ++a2) {
                    const ActionPair ap{action_from(a1), action_from(a2)};
                    trans[tindex(s, l, a1, a2)] = next_state_dist(static_cast<State>(s), l, ap, cfg);
                    rew[tindex(s, l, a1, a2)] = -reward(static_cast<State>(s), l, ap, cfg);
                }

    const double gamma = cfg.gamma;
    const int workers = worker_count();
    const size_t total = 2 * layer;
    detail::run_sweeps(sol, opt, [&](const std::vector<double>& v, std::vector<double>& out) {
        parallel_for(static_cast<int>(total), workers, [&](int ci) {
            const size_t sc = static_cast<size_t>(ci);
            const int s = sc >= layer ? 1 : 0;
            const size_t c = sc - static_cast<size_t>(s) * layer;
            const int l = static_cast<int>((c / stride / grid.size()) % cfg.L) + 1;
            // Expected continuation per (a1, s').
            double w[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
            for (int a = 0; a < 2; ++a) {
                const Edge* row = &post[(c * 2 + static_cast<size_t>(a)) * n];
                if (row[0].prob == 0.0) continue;
                for (int sn = 0; sn < 2; ++sn) {
                    const std::vector<double>& f = sn == 0 ? cfg.obs.pmf0 : cfg.obs.pmf1;
                    const size_t base = static_cast<size_t>(sn) * layer;
                    double acc = 0.0;
                    for (int op = 0; op < n; ++op) {
                        const Edge& e = row[op];
                        const double lo = v[base + e.lo];
                        acc += f[static_cast<size_t>(op)] *
                               (e.weight == 0.0 ? lo : lo + e.weight * (v[base + e.lo + stride] - lo));
                    }
                    w[a][sn] = acc;
                }
            }
            const double p = stop1[sc];
            double q[2];
            for (int a2 = 0; a2 < 2; ++a2) {
                double val = 0.0;
                for (int a = 0; a < 2; ++a) {
                    const double pa = a == 1 ? p : 1.0 - p;
                    if (pa == 0.0) continue;
                    const size_t t = tindex(s, l, a, a2);
                    val += pa * (rew[t] + gamma * (trans[t][0] * w[a][0] + trans[t][1] * w[a][1]));
                }
                q[a2] = val;
            }
            sol.gap[sc] = q[1] - q[0];
            if (actor == nullptr) {
                out[sc] = std::max(q[0], q[1]);
            } else {
                const double stop = acts[sc][static_cast<size_t>(s)];
                out[sc] = (1.0 - stop) * q[0] + stop * q[1];
            }
        });
    });
    return sol;
}

}  // namespace detail

/// Attacker best response to a fixed defender. `filter` is the attacker model
/// inside the defender's belief update.
template <DefenderPolicy D, AttackerPolicy F>
BeliefGridSolution attacker_best_response_vi(const D& defender, const F& filter, const GameConfig& cfg,
                                             const BeliefGrid& grid, const ViOptions& opt = {}) {
    return detail::attacker_vi<D, F, ConstantAttackerPolicy>(defender, filter, nullptr, cfg, grid, opt);
}

/// Value of a fixed strategy pair, in attacker reward, over (s, l, b1).
template <DefenderPolicy D, AttackerPolicy A, AttackerPolicy F>
BeliefGridSolution policy_evaluation_vi(const D& defender, const A& attacker, const F& filter,
                                        const GameConfig& cfg, const BeliefGrid& grid, const ViOptions& opt = {}) {
    return detail::attacker_vi<D, F, A>(defender, filter, &attacker, cfg, grid, opt);
}

/// Value at the initial point (s=0, l=L, b1=0). When the table carries an
/// observation context, the first observation is averaged under f(.|0).
inline double initial_value(const BeliefGridSolution& sol, const GameConfig& cfg) {
    if (sol.contexts == 1) return sol.value(0, sol.L, 0);
    double v = 0.0;
    for (int o = 0; o < sol.contexts; ++o) v += cfg.obs.pmf0[static_cast<size_t>(o)] * sol.value(0, sol.L, 0, o);
    return v;
}

/// Greedy attacker policy read off an attacker solution (nearest grid point).
class TabularAttackerPolicy {
public:
    explicit TabularAttackerPolicy(const BeliefGridSolution& sol) : sol_(sol) {
        if (sol.player != Player::Attacker) throw DomainError("TabularAttackerPolicy: not an attacker solution");
    }

    bool uses_observation() const { return sol_.contexts > 1; }
    bool uses_belief() const { return sol_.grid.K > 1; }

    std::array<double, 2> stop_probs(int l, double b1, int obs = -1) const {
        const int i = sol_.grid.K > 1 ? sol_.grid.nearest(b1) : 0;
        const int o = sol_.contexts > 1 ? std::max(obs, 0) : 0;
        return {sol_.stops(0, l, i, o) ? 1.0 : 0.0, sol_.stops(1, l, i, o) ? 1.0 : 0.0};
    }

private:
    BeliefGridSolution sol_;
};

/// Greedy defender policy read off a defender solution (nearest grid point).
class TabularDefenderPolicy {
public:
    explicit TabularDefenderPolicy(const BeliefGridSolution& sol) : sol_(sol) {
        if (sol.player != Player::Defender) throw DomainError("TabularDefenderPolicy: not a defender solution");
    }

    bool uses_observation() const { return sol_.contexts > 1; }

    double stop_prob(const DefenderView& v) const {
        const int o = sol_.contexts > 1 ? std::max(v.obs, 0) : 0;
        return sol_.stops(0, v.l, sol_.grid.nearest(v.b1), o) ? 1.0 : 0.0;
    }

private:
    BeliefGridSolution sol_;
};

}  // namespace stopgame
