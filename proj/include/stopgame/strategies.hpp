#pragma once

// Threshold strategies, their fictitious-play averages, and baseline defenders.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "stopgame/game.hpp"

namespace stopgame {

inline constexpr double kDefaultSteepness = 20.0;

/// Floor on the defender stop probability that an attacker gate perceives.
/// Without it every attacker would start at b1 = 0, where any threshold
/// defender stops with probability exactly 0.
inline constexpr double kDefaultGateFloor = 0.01;

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Smoothed threshold gate: (1 + (b(1-s)/(s(1-b)))^-k)^-1 with s = sigmoid(a).
/// Crosses 1/2 at b = sigmoid(a). In log-odds form this is sigmoid(k(logit b - a)).
inline double smooth_gate(double a, double b, double steepness = kDefaultSteepness) {
    if (b <= 0.0) return 0.0;
    if (b >= 1.0) return 1.0;
    return sigmoid(steepness * (logit(b) - a));
}

/// Observable context of a defender decision. `intrusion` is only consulted by
/// the oracle baseline, which is granted the true state for evaluation.
struct DefenderView {
    int l = 1;
    double b1 = 0.0;
    int obs = -1;  // latest observation, -1 if none
    bool intrusion = false;
};

template <class P>
concept DefenderPolicy = requires(const P& p, const DefenderView& v) {
    { p.stop_prob(v) } -> std::convertible_to<double>;
    { p.uses_observation() } -> std::convertible_to<bool>;
};

/// Attacker policies report stop probabilities for s=0 (start the intrusion)
/// and s=1 (end it) at once, since the defender's filter needs both.
template <class P>
concept AttackerPolicy = requires(const P& p, int l, double b1, int obs) {
    { p.stop_probs(l, b1, obs) } -> std::convertible_to<std::array<double, 2>>;
    { p.uses_observation() } -> std::convertible_to<bool>;
};

struct ThresholdStrategy {
    Player player = Player::Defender;
    std::vector<double> theta;  // theta[l-1] (defender), theta[s*L + l-1] (attacker)
    double steepness = kDefaultSteepness;
    double gate_floor = kDefaultGateFloor;

    int stops() const {
        return player == Player::Defender ? static_cast<int>(theta.size())
                                          : static_cast<int>(theta.size()) / 2;
    }

    static int dimension(Player player, int L) { return player == Player::Defender ? L : 2 * L; }

    void validate(int L) const {
        if (static_cast<int>(theta.size()) != dimension(player, L))
            throw DomainError("threshold vector has wrong length for the player role");
        if (!(steepness > 0.0)) throw DomainError("steepness must be positive");
        if (!(gate_floor >= 0.0 && gate_floor < 0.5)) throw DomainError("gate_floor must lie in [0, 0.5)");
    }

    /// Threshold on b1 (defender) or on the defender stop probability (attacker).
    double threshold(int index) const { return sigmoid(theta[static_cast<size_t>(index)]); }
};

inline double defender_stop_prob(const ThresholdStrategy& strategy, int l, double b1) {
    if (strategy.player != Player::Defender) throw DomainError("defender_stop_prob: not a defender strategy");
    if (l < 1 || l > strategy.stops()) throw DomainError("defender_stop_prob: l out of range");
    return smooth_gate(strategy.theta[static_cast<size_t>(l - 1)], b1, strategy.steepness);
}

inline double perceived_stop_prob(double pi1_prob, double floor) {
    return std::clamp(pi1_prob, floor, 1.0 - floor);
}

/// Attacker stop probability gated on the defender's stop probability. In
/// s=1 the attacker ends the intrusion once the defender is likely to stop;
/// in s=0 it holds back (continues) once the defender is likely to stop, so
/// the start probability is the complement of the gate.
inline double attacker_stop_prob(const ThresholdStrategy& strategy, int l, State s, double pi1_prob) {
    if (strategy.player != Player::Attacker) throw DomainError("attacker_stop_prob: not an attacker strategy");
    const int L = strategy.stops();
    if (l < 1 || l > L) throw DomainError("attacker_stop_prob: l out of range");
    if (s == State::Terminal) throw DomainError("attacker_stop_prob: terminal state");
    const size_t index = static_cast<size_t>(as_int(s) * L + l - 1);
    const double gate = smooth_gate(strategy.theta[index], perceived_stop_prob(pi1_prob, strategy.gate_floor),
                                    strategy.steepness);
    return s == State::Intrusion ? gate : 1.0 - gate;
}

/// Fictitious-play average: a buffer of threshold strategies played as the
/// per-context mean of their stop probabilities.
struct MixedStrategy {
    Player player = Player::Defender;
    std::vector<ThresholdStrategy> buffer;

    MixedStrategy() = default;
    MixedStrategy(Player p, std::vector<ThresholdStrategy> b) : player(p), buffer(std::move(b)) {}
    explicit MixedStrategy(ThresholdStrategy single) : player(single.player), buffer{std::move(single)} {}

    size_t size() const { return buffer.size(); }

    void append(ThresholdStrategy strategy) {
        if (strategy.player != player) throw DomainError("MixedStrategy: player role mismatch");
        if (!buffer.empty() && strategy.theta.size() != buffer.front().theta.size())
            throw DomainError("MixedStrategy: dimension mismatch");
        buffer.push_back(std::move(strategy));
    }

    void require_nonempty() const {
        if (buffer.empty()) throw DomainError("MixedStrategy: empty buffer");
    }
};

/// Uniform draw of one buffer member, for playing the mixture by per-episode
/// sampling instead of behavioral averaging.
template <class Gen>
const ThresholdStrategy& sample_member(const MixedStrategy& mix, Gen& rng) {
    mix.require_nonempty();
    const auto j = static_cast<size_t>((rng() >> 11) % mix.size());
    return mix.buffer[j];
}

inline double mixed_defender_stop_prob(const MixedStrategy& mix, int l, double b1) {
    mix.require_nonempty();
    double total = 0.0;
    for (const auto& s : mix.buffer) total += defender_stop_prob(s, l, b1);
    return total / static_cast<double>(mix.size());
}

inline double mixed_attacker_stop_prob(const MixedStrategy& mix, int l, State s, double pi1_prob) {
    mix.require_nonempty();
    double total = 0.0;
    for (const auto& strategy : mix.buffer) total += attacker_stop_prob(strategy, l, s, pi1_prob);
    return total / static_cast<double>(mix.size());
}

/// Defender mixture as a behavioral policy. Precomputes per-l thresholds in
/// log-odds form so the hot loop costs one exponential per buffer entry.
class DefenderMixturePolicy {
public:
    explicit DefenderMixturePolicy(const MixedStrategy& mix) {
        mix.require_nonempty();
        if (mix.player != Player::Defender) throw DomainError("DefenderMixturePolicy: not a defender mixture");
        L_ = mix.buffer.front().stops();
        size_ = mix.size();
        theta_.resize(static_cast<size_t>(L_) * size_);
        steepness_.resize(size_);
        for (size_t j = 0; j < size_; ++j) {
            steepness_[j] = mix.buffer[j].steepness;
            for (int l = 1; l <= L_; ++l) theta_[index(l, j)] = mix.buffer[j].theta[static_cast<size_t>(l - 1)];
        }
    }

    int stops() const { return L_; }
    bool uses_observation() const { return false; }

    double stop_prob(int l, double b1) const {
        if (l < 1 || l > L_) throw DomainError("DefenderMixturePolicy: l out of range");
        if (b1 <= 0.0) return 0.0;
        if (b1 >= 1.0) return 1.0;
        const double lb = logit(b1);
        double total = 0.0;
        for (size_t j = 0; j < size_; ++j) total += sigmoid(steepness_[j] * (lb - theta_[index(l, j)]));
        return total / static_cast<double>(size_);
    }

    double stop_prob(const DefenderView& v) const { return stop_prob(v.l, v.b1); }

private:
    size_t index(int l, size_t j) const { return static_cast<size_t>(l - 1) * size_ + j; }

    int L_ = 0;
    size_t size_ = 0;
    std::vector<double> theta_;
    std::vector<double> steepness_;
};

/// Attacker mixture as a behavioral policy over (s, l, b1). Each member gates
/// on the stop probability of `defender`, the defender strategy the attacker
/// plays against.
class AttackerMixturePolicy {
public:
    AttackerMixturePolicy(const MixedStrategy& attacker, DefenderMixturePolicy defender)
        : defender_(std::move(defender)) {
        attacker.require_nonempty();
        if (attacker.player != Player::Attacker) throw DomainError("AttackerMixturePolicy: not an attacker mixture");
        L_ = attacker.buffer.front().stops();
        if (L_ != defender_.stops()) throw DomainError("AttackerMixturePolicy: L mismatch with defender");
        size_ = attacker.size();
        theta_.resize(2 * static_cast<size_t>(L_) * size_);
        steepness_.resize(size_);
        floor_.resize(size_);
        for (size_t j = 0; j < size_; ++j) {
            steepness_[j] = attacker.buffer[j].steepness;
            floor_[j] = attacker.buffer[j].gate_floor;
            for (int k = 0; k < 2 * L_; ++k)
                theta_[static_cast<size_t>(k) * size_ + j] = attacker.buffer[j].theta[static_cast<size_t>(k)];
        }
    }

    bool uses_observation() const { return false; }
    const DefenderMixturePolicy& defender() const { return defender_; }

    /// Stop probabilities in s=0 and s=1 given the defender stop probability.
    std::array<double, 2> stop_probs_given(int l, double pi1_prob) const {
        if (l < 1 || l > L_) throw DomainError("AttackerMixturePolicy: l out of range");
        double start = 0.0;
        double leave = 0.0;
        const size_t row0 = static_cast<size_t>(l - 1) * size_;
        const size_t row1 = static_cast<size_t>(L_ + l - 1) * size_;
        for (size_t j = 0; j < size_; ++j) {
            const double lp = logit(perceived_stop_prob(pi1_prob, floor_[j]));
            start += 1.0 - sigmoid(steepness_[j] * (lp - theta_[row0 + j]));
            leave += sigmoid(steepness_[j] * (lp - theta_[row1 + j]));
        }
        const double n = static_cast<double>(size_);
        return {start / n, leave / n};
    }

    std::array<double, 2> stop_probs(int l, double b1, int /*obs*/ = -1) const {
        return stop_probs_given(l, defender_.stop_prob(l, b1));
    }

private:
    DefenderMixturePolicy defender_;
    int L_ = 0;
    size_t size_ = 0;
    std::vector<double> theta_;
    std::vector<double> steepness_;
    std::vector<double> floor_;
};

enum class BaselineKind { AlertOnAny, OracleIntrusionTime };

inline Action baseline_defender_action(BaselineKind kind, int o, bool intrusion_started) {
    switch (kind) {
        case BaselineKind::AlertOnAny: return o >= 1 ? Action::Stop : Action::Continue;
        case BaselineKind::OracleIntrusionTime: return intrusion_started ? Action::Stop : Action::Continue;
    }
    return Action::Continue;
}

/// Baseline defender as a (deterministic) policy.
class BaselineDefenderPolicy {
public:
    explicit BaselineDefenderPolicy(BaselineKind kind) : kind_(kind) {}

    BaselineKind kind() const { return kind_; }
    bool uses_observation() const { return kind_ == BaselineKind::AlertOnAny; }
    bool uses_belief() const { return false; }

    double stop_prob(const DefenderView& v) const {
        return baseline_defender_action(kind_, v.obs, v.intrusion) == Action::Stop ? 1.0 : 0.0;
    }

private:
    BaselineKind kind_;
};

/// Attacker with fixed stop probabilities independent of the context.
struct ConstantAttackerPolicy {
    double start = 0.0;
    double leave = 0.0;
    bool uses_observation() const { return false; }
    bool uses_belief() const { return false; }
    std::array<double, 2> stop_probs(int, double, int = -1) const { return {start, leave}; }
};

/// Defender with a fixed stop probability per l, independent of the belief.
struct ConstantDefenderPolicy {
    std::vector<double> stop;  // stop[l-1]
    bool uses_observation() const { return false; }
    bool uses_belief() const { return false; }
    double stop_prob(const DefenderView& v) const { return stop[static_cast<size_t>(v.l - 1)]; }
};

inline std::string to_string(Player p) { return p == Player::Defender ? "defender" : "attacker"; }

inline Player player_from_string(const std::string& s) {
    if (s == "defender") return Player::Defender;
    if (s == "attacker") return Player::Attacker;
    throw DomainError("unknown player '" + s + "'");
}

}  // namespace stopgame
