#pragma once

// Simultaneous-perturbation gradient estimates and best-response learning
// over threshold vectors.

#include <cmath>
#include <cstdint>
#include <vector>

#include "stopgame/simulate.hpp"
#include "stopgame/strategies.hpp"

namespace stopgame {

struct SpsaConfig {
    double a = 1.0;
    double c = 10.0;
    double eps = 0.101;     // exponent of the gain sequence a_n
    double lambda = 0.602;  // exponent of the perturbation sequence c_n
    double A = 100.0;
    int N = 50;
    int episodes_per_eval = 100;

    double gain(int n) const { return a / std::pow(n + A, eps); }
    double perturbation(int n) const { return c / std::pow(static_cast<double>(n), lambda); }

    void validate() const {
        if (!(a > 0.0 && c > 0.0 && eps > 0.0 && lambda > 0.0))
            throw DomainError("SpsaConfig: a, c, eps and lambda must be positive");
        if (!(A >= 0.0)) throw DomainError("SpsaConfig: A must be nonnegative");
        if (N < 1) throw DomainError("SpsaConfig: N must be at least 1");
        if (episodes_per_eval < 1) throw DomainError("SpsaConfig: episodes_per_eval must be at least 1");
    }
};

inline std::vector<double> rademacher(size_t dim, Rng& rng) {
    std::vector<double> delta(dim);
    for (double& d : delta) d = (rng() >> 63) != 0 ? 1.0 : -1.0;
    return delta;
}

/// (R_high - R_low) / (2 c_n delta_k) for a given perturbation delta.
template <class Eval>
std::vector<double> spsa_gradient(Eval&& evaluate, const std::vector<double>& theta, double c_n,
                                  const std::vector<double>& delta) {
    std::vector<double> hi(theta), lo(theta);
    for (size_t k = 0; k < theta.size(); ++k) {
        hi[k] += c_n * delta[k];
        lo[k] -= c_n * delta[k];
    }
    const double r_high = evaluate(hi);
    const double r_low = evaluate(lo);
    std::vector<double> g(theta.size());
    for (size_t k = 0; k < theta.size(); ++k) g[k] = (r_high - r_low) / (2.0 * c_n * delta[k]);
    return g;
}

template <class Eval>
std::vector<double> spsa_gradient(Eval&& evaluate, const std::vector<double>& theta, double c_n, Rng& rng) {
    return spsa_gradient(evaluate, theta, c_n, rademacher(theta.size(), rng));
}

inline std::vector<double> random_sign_vector(size_t dim, Rng& rng) { return rademacher(dim, rng); }

/// SPSA ascent on objective(theta, batch_seed). Both evaluations of a step
/// share the batch seed, so they see common random numbers.
template <class Objective>
std::vector<double> spsa_ascent(Objective&& objective, std::vector<double> theta, const SpsaConfig& spsa, Rng& rng,
                                std::vector<std::vector<double>>* iterates = nullptr) {
    spsa.validate();
    for (int n = 1; n <= spsa.N; ++n) {
        const auto delta = rademacher(theta.size(), rng);
        const std::uint64_t batch = rng();
        const auto g = spsa_gradient([&](const std::vector<double>& t) { return objective(t, batch); }, theta,
                                     spsa.perturbation(n), delta);
        const double a_n = spsa.gain(n);
        for (size_t k = 0; k < theta.size(); ++k) theta[k] += a_n * g[k];
        if (iterates != nullptr) iterates->push_back(theta);
    }
    return theta;
}

struct LearnOptions {
    double steepness = kDefaultSteepness;
    double gate_floor = kDefaultGateFloor;
    int workers = 0;  // 0: STOPGAME_THREADS
};

/// Defender best response to a fixed attacker behavior, learned by SPSA on J1.
template <AttackerPolicy A>
ThresholdStrategy learn_defender_best_response(const A& attacker, const GameConfig& cfg, const SpsaConfig& spsa,
                                               Rng& rng, const LearnOptions& opt = {}) {
    const int workers = opt.workers > 0 ? opt.workers : worker_count();
    ThresholdStrategy out{Player::Defender, random_sign_vector(static_cast<size_t>(cfg.L), rng), opt.steepness,
                          opt.gate_floor};
    auto objective = [&](const std::vector<double>& theta, std::uint64_t seed) {
        const DefenderMixturePolicy candidate(MixedStrategy(ThresholdStrategy{Player::Defender, theta, opt.steepness,
                                                                              opt.gate_floor}));
        return run_episodes(candidate, attacker, attacker, true, cfg, spsa.episodes_per_eval, seed, workers)
            .mean_return;
    };
    out.theta = spsa_ascent(objective, out.theta, spsa, rng);
    return out;
}

/// Attacker best response to a fixed defender mixture, learned by SPSA on
/// J2 = -J1. The candidate gates on `defender`; the defender's filter uses
/// `filter`.
template <AttackerPolicy F>
ThresholdStrategy learn_attacker_best_response(const DefenderMixturePolicy& defender, const F& filter,
                                               const GameConfig& cfg, const SpsaConfig& spsa, Rng& rng,
                                               const LearnOptions& opt = {}) {
    const int workers = opt.workers > 0 ? opt.workers : worker_count();
    ThresholdStrategy out{Player::Attacker, random_sign_vector(static_cast<size_t>(2 * cfg.L), rng), opt.steepness,
                          opt.gate_floor};
    auto objective = [&](const std::vector<double>& theta, std::uint64_t seed) {
        const AttackerMixturePolicy candidate(
            MixedStrategy(ThresholdStrategy{Player::Attacker, theta, opt.steepness, opt.gate_floor}), defender);
        return -run_episodes(defender, candidate, filter, false, cfg, spsa.episodes_per_eval, seed, workers)
                    .mean_return;
    };
    out.theta = spsa_ascent(objective, out.theta, spsa, rng);
    return out;
}

/// Best response of `player` to the opponent's current average. The attacker
/// average gates on the defender average; the defender's filter models the
/// attacker average.
inline ThresholdStrategy learn_best_response(Player player, const MixedStrategy& defender_mix,
                                             const MixedStrategy& attacker_mix, const GameConfig& cfg,
                                             const SpsaConfig& spsa, Rng& rng, const LearnOptions& opt = {}) {
    const DefenderMixturePolicy defender(defender_mix);
    const AttackerMixturePolicy attacker(attacker_mix, defender);
    if (player == Player::Defender) return learn_defender_best_response(attacker, cfg, spsa, rng, opt);
    return learn_attacker_best_response(defender, attacker, cfg, spsa, rng, opt);
}

}  // namespace stopgame
