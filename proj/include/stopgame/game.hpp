#pragma once

// Zero-sum optimal stopping game between an intrusion defender (player 1) and
// an attacker (player 2). The defender sees only alert observations and keeps
// a belief b1 = P[intrusion ongoing]; the attacker sees everything.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stopgame {

enum class State : int { NoIntrusion = 0, Intrusion = 1, Terminal = 2 };

/// Stop is encoded as 1 and continue as 0 for both players.
enum class Action : int { Continue = 0, Stop = 1 };

enum class Player : int { Defender = 1, Attacker = 2 };

struct ActionPair {
    Action defender = Action::Continue;
    Action attacker = Action::Continue;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when an observation has zero predictive probability under the
/// filter's model. The caller decides how to recover.
class FilterDegenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPmfFloor = 1e-12;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline int as_int(Action a) { return static_cast<int>(a); }
inline int as_int(State s) { return static_cast<int>(s); }
inline Action action_from(int v) { return v != 0 ? Action::Stop : Action::Continue; }

/// Per-state observation pmfs f(o|0) and f(o|1) over {0..n-1}.
struct ObservationModel {
    std::vector<double> pmf0;
    std::vector<double> pmf1;

    int size() const { return static_cast<int>(pmf0.size()); }

    double pmf(State s, int o) const {
        return s == State::Intrusion ? pmf1[static_cast<size_t>(o)]
                                     : pmf0[static_cast<size_t>(o)];
    }

    const std::vector<double>& row(State s) const {
        return s == State::Intrusion ? pmf1 : pmf0;
    }

    void validate() const {
        if (pmf0.empty() || pmf0.size() != pmf1.size())
            throw DomainError("observation model: pmf rows must be nonempty and of equal length");
        for (const auto* row : {&pmf0, &pmf1}) {
            double total = 0.0;
            for (double p : *row) {
                if (!(p >= 0.0)) throw DomainError("observation model: negative or NaN probability");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw DomainError("observation model: pmf does not sum to 1");
        }
    }

    /// Floors every entry at `floor` and renormalizes both rows.
    static ObservationModel floored(std::vector<double> p0, std::vector<double> p1,
                                    double floor = kPmfFloor) {
        auto fix = [floor](std::vector<double>& row) {
            for (double& p : row) p = std::max(p, floor);
            const double total = std::accumulate(row.begin(), row.end(), 0.0);
            for (double& p : row) p /= total;
        };
        fix(p0);
        fix(p1);
        return ObservationModel{std::move(p0), std::move(p1)};
    }
};

/// Beta-binomial pmf over {0..n-1}; used for synthetic alert models.
inline std::vector<double> beta_binomial_pmf(int n, double alpha, double beta) {
    if (n < 1 || alpha <= 0.0 || beta <= 0.0) throw DomainError("beta_binomial_pmf: bad parameters");
    const int trials = n - 1;
    auto lbeta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
    std::vector<double> pmf(static_cast<size_t>(n));
    for (int k = 0; k <= trials; ++k) {
        const double lchoose =
            std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
        pmf[static_cast<size_t>(k)] =
            std::exp(lchoose + lbeta(k + alpha, trials - k + beta) - lbeta(alpha, beta));
    }
    return pmf;
}

/// Alerts are few without intrusion and skewed high during one.
inline ObservationModel beta_binomial_model(int n) {
    return ObservationModel::floored(beta_binomial_pmf(n, 0.7, 3.0), beta_binomial_pmf(n, 1.0, 0.7));
}

struct GameConfig {
    int L = 7;
    double R_st = 20.0;
    double R_cost = -2.0;
    double R_int = -1.0;
    double gamma = 0.99;
    std::vector<double> phi;  // phi[l-1] for l in 1..L
    ObservationModel obs;
    int horizon_cap = 1000;
    std::uint64_t seed = 0;

    double prevention(int l) const { return phi[static_cast<size_t>(l - 1)]; }
    int num_obs() const { return obs.size(); }

    static std::vector<double> half_inverse_phi(int L) {
        std::vector<double> phi(static_cast<size_t>(L));
        for (int l = 1; l <= L; ++l) phi[static_cast<size_t>(l - 1)] = 1.0 / (2.0 * l);
        return phi;
    }

    void validate() const {
        if (L < 1) throw DomainError("GameConfig: L must be positive");
        if (!(R_st > 0.0)) throw DomainError("GameConfig: R_st must be > 0");
        if (!(R_cost < 0.0)) throw DomainError("GameConfig: R_cost must be < 0");
        if (!(R_int < 0.0)) throw DomainError("GameConfig: R_int must be < 0");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("GameConfig: gamma must lie in [0,1)");
        if (static_cast<int>(phi.size()) != L) throw DomainError("GameConfig: phi must have L entries");
        for (double p : phi)
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("GameConfig: phi values must lie in [0,1]");
        for (int l = 1; l <= L; ++l)
            if (R_st / l - R_cost / l - R_int < 0.0)
                throw DomainError("GameConfig: R_st/l - R_cost/l - R_int must be nonnegative");
        if (horizon_cap < 1) throw DomainError("GameConfig: horizon_cap must be positive");
        obs.validate();
    }
};

/// Game parameters of the reference instance with the given alert model.
inline GameConfig reference_config(ObservationModel obs, int L = 7) {
    GameConfig cfg;
    cfg.L = L;
    cfg.phi = GameConfig::half_inverse_phi(L);
    cfg.obs = std::move(obs);
    return cfg;
}

/// Desk-scale instance: three stops, ten-symbol alert alphabet.
inline GameConfig desk_config() { return reference_config(beta_binomial_model(10), 3); }

inline void check_stops(int l, const GameConfig& cfg) {
    if (l < 1 || l > cfg.L)
        throw DomainError("stops remaining l=" + std::to_string(l) + " outside 1.." +
                          std::to_string(cfg.L));
}

/// Distribution of the next state indexed by State (0, 1, Terminal).
inline std::array<double, 3> next_state_dist(State s, int l, ActionPair a, const GameConfig& cfg) {
    check_stops(l, cfg);
    if (s == State::Terminal) return {0.0, 0.0, 1.0};
    // The final defender stop ends the game.
    if (l == 1 && a.defender == Action::Stop) return {0.0, 0.0, 1.0};
    if (s == State::NoIntrusion)
        return a.attacker == Action::Stop ? std::array<double, 3>{0.0, 1.0, 0.0}
                                          : std::array<double, 3>{1.0, 0.0, 0.0};
    if (a.attacker == Action::Stop) return {0.0, 0.0, 1.0};
    const double phi = cfg.prevention(l);
    return {0.0, 1.0 - phi, phi};
}

inline double transition_prob(State next, State s, int l, ActionPair a, const GameConfig& cfg) {
    return next_state_dist(s, l, a, cfg)[static_cast<size_t>(as_int(next))];
}

/// Defender reward; the attacker receives the negation.
inline double reward(State s, int l, ActionPair a, const GameConfig& cfg) {
    if (s == State::Terminal) return 0.0;
    if (s == State::NoIntrusion)
        return a.defender == Action::Stop ? cfg.R_cost / l : 0.0;
    if (a.attacker == Action::Stop) return 0.0;
    return a.defender == Action::Stop ? cfg.R_st / l : cfg.R_int;
}

/// Stops remaining after the defender acts; 0 means the game ended.
inline int stops_after(int l, Action a1) { return a1 == Action::Stop ? l - 1 : l; }

/// Unnormalized mass of the next non-terminal state under the filter's model
/// of the attacker: index 0 is s'=0, index 1 is s'=1. Does not depend on the
/// defender action unless it is the final stop.
inline std::array<double, 2> predicted_state_mass(double b1, Action a1, double attacker_stop0,
                                                  double attacker_stop1, int l,
                                                  const GameConfig& cfg) {
    std::array<double, 2> mass{0.0, 0.0};
    const double prior[2] = {1.0 - b1, b1};
    const double stop[2] = {attacker_stop0, attacker_stop1};
    for (int s = 0; s < 2; ++s) {
        if (prior[s] == 0.0) continue;
        for (int a2 = 0; a2 < 2; ++a2) {
            const double pa = a2 == 1 ? stop[s] : 1.0 - stop[s];
            if (pa == 0.0) continue;
            const auto next = next_state_dist(static_cast<State>(s), l, {a1, action_from(a2)}, cfg);
            mass[0] += prior[s] * pa * next[0];
            mass[1] += prior[s] * pa * next[1];
        }
    }
    return mass;
}

/// Bayes filter conditioned on the realized observation `o` emitted by the
/// next state. The attacker's behavior at the current belief is given by its
/// stop probabilities in state 0 and state 1.
inline double belief_update(double b1, Action a1, int o, double attacker_stop0, double attacker_stop1,
                            int l, const GameConfig& cfg) {
    if (o < 0 || o >= cfg.num_obs()) throw DomainError("belief_update: observation out of range");
    const auto mass = predicted_state_mass(b1, a1, attacker_stop0, attacker_stop1, l, cfg);
    const double m0 = mass[0] * cfg.obs.pmf0[static_cast<size_t>(o)];
    const double m1 = mass[1] * cfg.obs.pmf1[static_cast<size_t>(o)];
    const double total = m0 + m1;
    if (!(total > 0.0)) throw FilterDegenerate("belief_update: observation has zero predictive probability");
    return std::clamp(m1 / total, 0.0, 1.0);
}

/// Belief to adopt after an observation the filter deemed impossible: the
/// likelihood ratio alone, or b1 if neither state can emit o.
inline double reset_belief(double b1, int o, const GameConfig& cfg) {
    const double z0 = cfg.obs.pmf0[static_cast<size_t>(o)];
    const double z1 = cfg.obs.pmf1[static_cast<size_t>(o)];
    return z0 + z1 > 0.0 ? z1 / (z0 + z1) : b1;
}

/// Largest absolute stage reward; bounds the truncation error of episodes.
inline double max_abs_reward(const GameConfig& cfg) {
    return std::max({std::abs(cfg.R_st), std::abs(cfg.R_cost), std::abs(cfg.R_int)});
}

inline double truncation_bound(const GameConfig& cfg, int horizon) {
    return std::pow(cfg.gamma, horizon) * max_abs_reward(cfg) / (1.0 - cfg.gamma);
}

}  // namespace stopgame
