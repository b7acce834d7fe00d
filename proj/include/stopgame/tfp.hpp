#pragma once

// Threshold fictitious play: both players learn SPSA best responses to the
// opponent's current average, append them to their buffers, and the pair is
// scored by exploitability until it drops below delta.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include "stopgame/exploitability.hpp"
#include "stopgame/simulate.hpp"
#include "stopgame/spsa.hpp"

namespace stopgame {

struct TfpEvalConfig {
    int grid = 100;
    ViOptions vi{};
    int stride = 1;            // exploitability every stride iterations (and on the last)
    int eval_episodes = 1000;  // episodes for the simulated metrics
};

struct TfpMetrics {
    int iter = 0;
    double exploitability = std::numeric_limits<double>::quiet_NaN();
    double J1_vs_br_attacker = std::numeric_limits<double>::quiet_NaN();
    double J1_defender_mix = 0.0;
    double mean_T = 0.0;
    double mean_intrusion_len = 0.0;
};

struct TfpState {
    MixedStrategy defender{Player::Defender, {}};
    MixedStrategy attacker{Player::Attacker, {}};
    int iteration = 0;
    std::vector<TfpMetrics> history;
    double delta = 0.0;
    double exploitability_now = std::numeric_limits<double>::infinity();
    bool converged = false;  // exploitability fell below delta
};

using TfpProgress = std::function<void(const TfpMetrics&)>;

inline TfpMetrics evaluate_tfp_pair(const TfpState& state, const GameConfig& cfg, const TfpEvalConfig& eval,
                                    bool with_exploitability, std::uint64_t seed) {
    TfpMetrics m;
    m.iter = state.iteration;
    const DefenderMixturePolicy defender(state.defender);
    const AttackerMixturePolicy attacker(state.attacker, defender);
    if (with_exploitability) {
        const auto r = exploitability_of(defender, attacker, attacker, cfg, BeliefGrid(eval.grid), eval.vi);
        m.exploitability = r.value;
        m.J1_vs_br_attacker = r.defender_vs_br_attacker();
    }
    if (eval.eval_episodes > 0) {
        const auto stats = run_episodes(defender, attacker, cfg, eval.eval_episodes, seed);
        m.J1_defender_mix = stats.mean_return;
        m.mean_T = stats.mean_length;
        m.mean_intrusion_len = stats.mean_intrusion_length;
    }
    return m;
}

/// Per-player SPSA settings; the attacker's landscape is flatter and usually
/// needs larger, faster-decaying gains than the defender's.
struct TfpSpsa {
    SpsaConfig defender;
    SpsaConfig attacker;
};

inline TfpState run_tfp(const GameConfig& cfg, const TfpSpsa& spsa, double delta, int max_iters,
                        const TfpEvalConfig& eval, std::uint64_t seed, const LearnOptions& learn = {},
                        const TfpProgress& progress = {}) {
    cfg.validate();
    spsa.defender.validate();
    spsa.attacker.validate();
    if (!(delta > 0.0)) throw DomainError("run_tfp: delta must be positive");
    if (eval.stride < 1) throw DomainError("run_tfp: stride must be at least 1");

    Rng rng(derive_seed(seed, 0));
    TfpState state;
    state.delta = delta;
    state.defender.append({Player::Defender, random_sign_vector(static_cast<size_t>(cfg.L), rng), learn.steepness,
                           learn.gate_floor});
    state.attacker.append({Player::Attacker, random_sign_vector(static_cast<size_t>(2 * cfg.L), rng),
                           learn.steepness, learn.gate_floor});
    state.exploitability_now =
        exploitability(state.defender, state.attacker, cfg, BeliefGrid(eval.grid), eval.vi).value;

    while (state.exploitability_now >= delta && state.iteration < max_iters) {
        Rng def_rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(state.iteration) + 1));
        Rng att_rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(state.iteration) + 2));
        auto br1 = learn_best_response(Player::Defender, state.defender, state.attacker, cfg, spsa.defender, def_rng,
                                       learn);
        auto br2 = learn_best_response(Player::Attacker, state.defender, state.attacker, cfg, spsa.attacker, att_rng,
                                       learn);
        state.defender.append(std::move(br1));
        state.attacker.append(std::move(br2));
        ++state.iteration;

        const bool score = state.iteration % eval.stride == 0 || state.iteration == max_iters;
        auto m = evaluate_tfp_pair(state, cfg, eval, score, derive_seed(~seed, static_cast<std::uint64_t>(state.iteration)));
        if (score) state.exploitability_now = m.exploitability;
        state.history.push_back(m);
        if (progress) progress(m);
    }
    state.converged = state.exploitability_now < delta;
    return state;
}

inline TfpState run_tfp(const GameConfig& cfg, const SpsaConfig& spsa, double delta, int max_iters,
                        const TfpEvalConfig& eval, std::uint64_t seed, const LearnOptions& learn = {},
                        const TfpProgress& progress = {}) {
    return run_tfp(cfg, TfpSpsa{spsa, spsa}, delta, max_iters, eval, seed, learn, progress);
}

inline void write_learning_curve_csv(std::ostream& os, const std::vector<TfpMetrics>& history) {
    os << "iter,exploitability,J1_vs_br_attacker,J1_defender_mix,mean_T,mean_intrusion_len\n";
    for (const auto& m : history)
        os << m.iter << ',' << format_double(m.exploitability) << ',' << format_double(m.J1_vs_br_attacker) << ','
           << format_double(m.J1_defender_mix) << ',' << format_double(m.mean_T) << ','
           << format_double(m.mean_intrusion_len) << '\n';
}

}  // namespace stopgame
