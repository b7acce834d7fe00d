#pragma once

// Uniform belief grid and the value/policy tables computed on it.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "stopgame/game.hpp"

namespace stopgame {

/// K+1 equally spaced points on [0,1] with linear interpolation.
struct BeliefGrid {
    int K = 100;

    explicit BeliefGrid(int k = 100) : K(k) {
        if (K < 1) throw DomainError("BeliefGrid: K must be positive");
    }

    int size() const { return K + 1; }
    double point(int i) const { return static_cast<double>(i) / K; }

    /// Left neighbor index and the weight of the right neighbor.
    struct Cell {
        int index = 0;
        double weight = 0.0;
    };

    Cell locate(double b) const {
        const double x = std::clamp(b, 0.0, 1.0) * K;
        const int j = std::min(static_cast<int>(x), K - 1);
        return {j, x - j};
    }

    int nearest(double b) const { return static_cast<int>(std::lround(std::clamp(b, 0.0, 1.0) * K)); }

    /// Interpolates values stored at stride `stride` starting at `base`.
    template <class V>
    double interpolate(const V& values, double b, size_t base = 0, size_t stride = 1) const {
        const Cell c = locate(b);
        const double lo = values[base + static_cast<size_t>(c.index) * stride];
        if (c.weight == 0.0) return lo;
        return (1.0 - c.weight) * lo + c.weight * values[base + static_cast<size_t>(c.index + 1) * stride];
    }
};

struct ViOptions {
    double tol = 1e-6;
    int max_sweeps = 10000;
    int fixed_sweeps = 0;     // > 0: run exactly this many sweeps from zero (finite horizon)
    double tie_tol = 1e-9;    // Q-gaps within this band count as indifferent
};

/// Values and greedy policy over (s, l, grid point, observation context).
/// Defender tables have a single state layer; attacker tables have two
/// (s = 0, 1). The context dimension is the latest observation when the
/// opponent conditions on it, otherwise 1.
struct BeliefGridSolution {
    Player player = Player::Defender;
    int L = 1;
    BeliefGrid grid{1};
    int contexts = 1;
    std::vector<double> values;
    std::vector<double> gap;  // Q(S) - Q(C) in the solving player's reward
    std::vector<double> mixed_stop;  // randomized stop probabilities, when the policy mixes
    std::vector<double> residuals;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;

    int layers() const { return player == Player::Defender ? 1 : 2; }

    size_t index(int s, int l, int i, int o = 0) const {
        return ((static_cast<size_t>(s) * L + static_cast<size_t>(l - 1)) * grid.size() + static_cast<size_t>(i)) *
                   contexts +
               static_cast<size_t>(o);
    }

    void allocate() {
        const size_t n = static_cast<size_t>(layers()) * L * grid.size() * contexts;
        values.assign(n, 0.0);
        gap.assign(n, 0.0);
    }

    double value(int s, int l, int i, int o = 0) const { return values[index(s, l, i, o)]; }

    double stop_prob(int s, int l, int i, int o = 0) const {
        if (!mixed_stop.empty()) return mixed_stop[index(s, l, i, o)];
        return stops(s, l, i, o) ? 1.0 : 0.0;
    }

    /// Greedy stop decision; ties go to continue.
    bool stops(int s, int l, int i, int o = 0) const { return gap[index(s, l, i, o)] > 0.0; }

    /// Value at an off-grid belief by linear interpolation.
    double value_at(int s, int l, double b, int o = 0) const {
        return grid.interpolate(values, b, index(s, l, 0, o), static_cast<size_t>(contexts));
    }

    void write_values_csv(std::ostream& os) const {
        os << (player == Player::Defender ? "l,b,V\n" : "s,l,b,V\n");
        for (int s = 0; s < layers(); ++s)
            for (int l = 1; l <= L; ++l)
                for (int i = 0; i < grid.size(); ++i) {
                    if (player == Player::Attacker) os << s << ',';
                    os << l << ',' << format_double(grid.point(i)) << ',' << format_double(value(s, l, i)) << '\n';
                }
    }

    void write_policy_csv(std::ostream& os) const {
        os << "s,l,b,stop_prob\n";
        for (int s = 0; s < layers(); ++s)
            for (int l = 1; l <= L; ++l)
                for (int i = 0; i < grid.size(); ++i)
                    os << s << ',' << l << ',' << format_double(grid.point(i)) << ','
                       << format_double(stop_prob(s, l, i)) << '\n';
    }
};

}  // namespace stopgame
