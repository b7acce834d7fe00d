#pragma once

// Minimax value iteration on the belief grid. Each cell solves a 2x4 stage
// game whose continuation values use the posterior under each pure attacker
// column and each observation.

#include <cstdint>
#include <vector>

#include "stopgame/best_response.hpp"
#include "stopgame/stage_game.hpp"

namespace stopgame {

inline BeliefGridSolution minimax_value_iteration(const GameConfig& cfg, const BeliefGrid& grid,
                                                  const ViOptions& opt = {}) {
    cfg.validate();
    BeliefGridSolution sol;
    sol.player = Player::Defender;
    sol.L = cfg.L;
    sol.grid = grid;
    sol.allocate();
    sol.mixed_stop.assign(sol.values.size(), 0.0);
    const int n = cfg.num_obs();
    const size_t cells = sol.values.size();

    // Entry (cell, a1, col) holds the immediate reward and a block of edges.
    const size_t blocks = cells * 8;
    std::vector<double> rew(blocks);
    std::vector<std::uint32_t> offset(blocks + 1, 0);
    std::vector<detail::Edge> edges;
    edges.reserve(blocks * static_cast<size_t>(n));
    for (int l = 1; l <= cfg.L; ++l)
        for (int i = 0; i < grid.size(); ++i) {
            const size_t c = sol.index(0, l, i);
            const double b = grid.point(i);
            for (int a = 0; a < 2; ++a) {
                const Action a1 = action_from(a);
                const int next_l = stops_after(l, a1);
                for (int col = 0; col < 4; ++col) {
                    const double q0 = (col >> 1) & 1;
                    const double q1 = col & 1;
                    const size_t k = c * 8 + static_cast<size_t>(a) * 4 + static_cast<size_t>(col);
                    rew[k] = detail::expected_reward(b, l, a1, q0, q1, cfg);
                    if (next_l >= 1) {
                        const auto mass = predicted_state_mass(b, a1, q0, q1, l, cfg);
                        for (int op = 0; op < n; ++op) {
                            const double m0 = mass[0] * cfg.obs.pmf0[static_cast<size_t>(op)];
                            const double m1 = mass[1] * cfg.obs.pmf1[static_cast<size_t>(op)];
                            const double p = m0 + m1;
                            if (!(p > 0.0)) continue;
                            const auto cell = grid.locate(m1 / p);
                            edges.push_back({p, static_cast<std::uint32_t>(sol.index(0, next_l, cell.index)),
                                             cell.weight});
                        }
                    }
                    offset[k + 1] = static_cast<std::uint32_t>(edges.size());
                }
            }
        }

    const double gamma = cfg.gamma;
    const int workers = worker_count();
    detail::run_sweeps(sol, opt, [&](const std::vector<double>& v, std::vector<double>& out) {
        parallel_for(static_cast<int>(cells), workers, [&](int ci) {
            const size_t c = static_cast<size_t>(ci);
            StagePayoff m{};
            for (size_t k = 0; k < 8; ++k) {
                const size_t block = c * 8 + k;
                double cont = 0.0;
                for (std::uint32_t e = offset[block]; e < offset[block + 1]; ++e) {
                    const auto& ed = edges[e];
                    const double lo = v[ed.lo];
                    cont += ed.prob * (ed.weight == 0.0 ? lo : lo + ed.weight * (v[ed.lo + 1] - lo));
                }
                m[k / 4][k % 4] = rew[block] + gamma * cont;
            }
            const StageSolution s = solve_stage_game(m);
            out[c] = s.value;
            sol.mixed_stop[c] = s.stop_prob;
            sol.gap[c] = detail::lower_envelope(m, 1.0) - detail::lower_envelope(m, 0.0);
        });
    });
    return sol;
}

}  // namespace stopgame
