#pragma once

// Approximate exploitability J1(br1, pi2) + J2(pi1, br2) at the initial point.

#include "stopgame/best_response.hpp"
#include "stopgame/strategies.hpp"

namespace stopgame {

struct ExploitabilityReport {
    double value = 0.0;
    double defender_br = 0.0;   // J1 of the defender best response against pi2
    double attacker_br = 0.0;   // J2 of the attacker best response against pi1
    bool converged = true;

    /// J1 of pi1 against its best-responding attacker.
    double defender_vs_br_attacker() const { return -attacker_br; }
};

template <DefenderPolicy D, AttackerPolicy A, AttackerPolicy F>
ExploitabilityReport exploitability_of(const D& defender, const A& attacker, const F& filter, const GameConfig& cfg,
                                       const BeliefGrid& grid, const ViOptions& opt = {}) {
    const auto dsol = defender_best_response_vi(attacker, cfg, grid, opt);
    const auto asol = attacker_best_response_vi(defender, filter, cfg, grid, opt);
    ExploitabilityReport r;
    r.defender_br = initial_value(dsol, cfg);
    r.attacker_br = initial_value(asol, cfg);
    r.value = r.defender_br + r.attacker_br;
    r.converged = dsol.converged && asol.converged;
    return r;
}

/// Exploitability of a pair of fictitious-play averages. The attacker mixture
/// gates on the defender mixture and also drives the defender's filter.
inline ExploitabilityReport exploitability(const MixedStrategy& pi1, const MixedStrategy& pi2, const GameConfig& cfg,
                                           const BeliefGrid& grid, const ViOptions& opt = {}) {
    const DefenderMixturePolicy defender(pi1);
    const AttackerMixturePolicy attacker(pi2, defender);
    return exploitability_of(defender, attacker, attacker, cfg, grid, opt);
}

/// Exploitability of a baseline defender paired with its best-response attacker.
inline ExploitabilityReport baseline_exploitability(BaselineKind kind, const GameConfig& cfg, const BeliefGrid& grid,
                                                    const ViOptions& opt = {}) {
    const BaselineDefenderPolicy defender(kind);
    const ConstantAttackerPolicy no_filter{};
    const auto asol = attacker_best_response_vi(defender, no_filter, cfg, grid, opt);
    const TabularAttackerPolicy attacker(asol);
    const auto dsol = defender_best_response_vi(attacker, cfg, grid, opt);
    ExploitabilityReport r;
    r.attacker_br = initial_value(asol, cfg);
    r.defender_br = initial_value(dsol, cfg);
    r.value = r.defender_br + r.attacker_br;
    r.converged = dsol.converged && asol.converged;
    return r;
}

}  // namespace stopgame
