#pragma once

// Episode simulation. Every episode draws from its own random stream derived
// from (batch seed, episode index), so batch results do not depend on how the
// episodes are spread across worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "stopgame/game.hpp"
#include "stopgame/strategies.hpp"

namespace stopgame {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic child seed for stream `index` under `parent`.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(splitmix64(parent) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0,1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Inverse-CDF sampler for the per-state observation pmfs.
class ObservationSampler {
public:
    explicit ObservationSampler(const ObservationModel& obs) {
        for (int s = 0; s < 2; ++s) {
            const auto& row = obs.row(static_cast<State>(s));
            auto& cdf = cdf_[s];
            cdf.resize(row.size());
            double acc = 0.0;
            for (size_t o = 0; o < row.size(); ++o) cdf[o] = (acc += row[o]);
        }
    }

    int sample(State s, double u) const {
        const auto& cdf = cdf_[as_int(s)];
        const double target = u * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    }

private:
    std::vector<double> cdf_[2];
};

struct StepRecord {
    int t = 0;
    State s = State::NoIntrusion;
    int l = 0;
    double b1 = 0.0;
    Action a1 = Action::Continue;
    Action a2 = Action::Continue;
    int o = -1;  // observation emitted by the next state, -1 when it is terminal
    double r = 0.0;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    double discounted_return = 0.0;
    std::vector<int> defender_stop_times;
    std::vector<int> attacker_stop_times;
    bool truncated = false;

    int length() const { return static_cast<int>(steps.size()); }
    int intrusion_length() const {
        return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                              [](const StepRecord& r) { return r.s == State::Intrusion; }));
    }
};

/// Compact per-episode result used inside training loops.
struct EpisodeSummary {
    double discounted_return = 0.0;
    int length = 0;
    int intrusion_length = 0;
    bool truncated = false;
};

struct StepOutcome {
    ActionPair actions;
    State next = State::Terminal;
    int obs = -1;
    double reward = 0.0;
};

/// One simultaneous move given both players' stop probabilities. Always
/// consumes four uniforms so paired evaluations stay aligned.
inline StepOutcome sample_step(State s, int l, double defender_stop, double attacker_stop,
                               const GameConfig& cfg, const ObservationSampler& sampler, Rng& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    const double u3 = uniform01(rng);
    const double u4 = uniform01(rng);
    if (s == State::Terminal) throw DomainError("sample_step: state is terminal");
    StepOutcome out;
    out.actions = {u1 < defender_stop ? Action::Stop : Action::Continue,
                   u2 < attacker_stop ? Action::Stop : Action::Continue};
    out.reward = reward(s, l, out.actions, cfg);
    const auto dist = next_state_dist(s, l, out.actions, cfg);
    out.next = u3 < dist[0] ? State::NoIntrusion : (u3 < dist[0] + dist[1] ? State::Intrusion : State::Terminal);
    if (out.next != State::Terminal) out.obs = sampler.sample(out.next, u4);
    return out;
}

/// Plays one episode. `attacker` acts; `filter` is the defender's model of the
/// attacker used for the belief update (usually the same policy).
template <DefenderPolicy D, AttackerPolicy A, AttackerPolicy F, bool Record = true>
auto play_episode(const D& defender, const A& attacker, const F& filter, const GameConfig& cfg,
                  const ObservationSampler& sampler, Rng& rng, bool filter_is_attacker) {
    EpisodeTrace trace;
    EpisodeSummary summary;
    State s = State::NoIntrusion;
    int l = cfg.L;
    double b1 = 0.0;
    double discount = 1.0;
    int obs = sampler.sample(s, uniform01(rng));
    int t = 1;
    for (; s != State::Terminal && t <= cfg.horizon_cap; ++t) {
        const double p1 = defender.stop_prob(DefenderView{l, b1, obs, s == State::Intrusion});
        const auto q = attacker.stop_probs(l, b1, obs);
        const StepOutcome step = sample_step(s, l, p1, q[static_cast<size_t>(as_int(s))], cfg, sampler, rng);
        summary.discounted_return += discount * step.reward;
        discount *= cfg.gamma;
        ++summary.length;
        if (s == State::Intrusion) ++summary.intrusion_length;
        if constexpr (Record) {
            trace.steps.push_back({t, s, l, b1, step.actions.defender, step.actions.attacker, step.obs, step.reward});
            if (step.actions.defender == Action::Stop) trace.defender_stop_times.push_back(t);
            if (step.actions.attacker == Action::Stop) trace.attacker_stop_times.push_back(t);
        }
        if (step.next != State::Terminal) {
            const auto qf = filter_is_attacker ? q : filter.stop_probs(l, b1, obs);
            try {
                b1 = belief_update(b1, step.actions.defender, step.obs, qf[0], qf[1], l, cfg);
            } catch (const FilterDegenerate&) {
                b1 = reset_belief(b1, step.obs, cfg);
            }
            l = stops_after(l, step.actions.defender);
        }
        s = step.next;
        obs = step.obs;
    }
    summary.truncated = s != State::Terminal;
    if constexpr (Record) {
        trace.discounted_return = summary.discounted_return;
        trace.truncated = summary.truncated;
        return trace;
    } else {
        return summary;
    }
}

template <DefenderPolicy D, AttackerPolicy A>
EpisodeTrace simulate_episode(const D& defender, const A& attacker, const GameConfig& cfg, Rng& rng) {
    const ObservationSampler sampler(cfg.obs);
    return play_episode<D, A, A, true>(defender, attacker, attacker, cfg, sampler, rng, true);
}

template <DefenderPolicy D, AttackerPolicy A, AttackerPolicy F>
EpisodeTrace simulate_episode(const D& defender, const A& attacker, const F& filter, const GameConfig& cfg,
                              Rng& rng) {
    const ObservationSampler sampler(cfg.obs);
    return play_episode<D, A, F, true>(defender, attacker, filter, cfg, sampler, rng, false);
}

inline void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
    os << "t,s,l,b1,a1,a2,o,r\n";
    for (const auto& r : trace.steps) {
        os << r.t << ',' << as_int(r.s) << ',' << r.l << ',' << format_double(r.b1) << ',' << as_int(r.a1) << ','
           << as_int(r.a2) << ',' << r.o << ',' << format_double(r.r) << '\n';
    }
}

/// Worker count from STOPGAME_THREADS (default 1).
inline int worker_count() {
    if (const char* env = std::getenv("STOPGAME_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

/// Runs fn(i) for i in [0, count) over `workers` threads with contiguous blocks.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int begin = count * w / workers;
        const int end = count * (w + 1) / workers;
        pool.emplace_back([begin, end, &fn] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct BatchStats {
    int episodes = 0;
    double mean_return = 0.0;
    double sd_return = 0.0;
    double mean_length = 0.0;
    double mean_intrusion_length = 0.0;
    double sd_length = 0.0;
    double sd_intrusion_length = 0.0;
    std::vector<EpisodeSummary> per_episode;

    double ci95(double sd) const { return episodes > 1 ? 1.96 * sd / std::sqrt(static_cast<double>(episodes)) : 0.0; }
    double ci95_halfwidth() const { return ci95(sd_return); }
};

inline BatchStats summarize(std::vector<EpisodeSummary> results, bool keep_episodes) {
    BatchStats stats;
    const int count = static_cast<int>(results.size());
    stats.episodes = count;
    if (count == 0) return stats;
    double sum = 0.0, len = 0.0, intr = 0.0;
    for (const auto& r : results) {
        sum += r.discounted_return;
        len += r.length;
        intr += r.intrusion_length;
    }
    const double n = static_cast<double>(count);
    stats.mean_return = sum / n;
    stats.mean_length = len / n;
    stats.mean_intrusion_length = intr / n;
    double ss = 0.0, sl = 0.0, si = 0.0;
    for (const auto& r : results) {
        ss += (r.discounted_return - stats.mean_return) * (r.discounted_return - stats.mean_return);
        sl += (r.length - stats.mean_length) * (r.length - stats.mean_length);
        si += (r.intrusion_length - stats.mean_intrusion_length) * (r.intrusion_length - stats.mean_intrusion_length);
    }
    if (count > 1) {
        stats.sd_return = std::sqrt(ss / (n - 1.0));
        stats.sd_length = std::sqrt(sl / (n - 1.0));
        stats.sd_intrusion_length = std::sqrt(si / (n - 1.0));
    }
    if (keep_episodes) stats.per_episode = std::move(results);
    return stats;
}

/// Plays `count` episodes with per-episode streams derived from `seed`.
template <DefenderPolicy D, AttackerPolicy A, AttackerPolicy F>
BatchStats run_episodes(const D& defender, const A& attacker, const F& filter, bool filter_is_attacker,
                        const GameConfig& cfg, int count, std::uint64_t seed, int workers = worker_count(),
                        bool keep_episodes = false) {
    const ObservationSampler sampler(cfg.obs);
    std::vector<EpisodeSummary> results(static_cast<size_t>(std::max(count, 0)));
    parallel_for(count, workers, [&](int i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        results[static_cast<size_t>(i)] =
            play_episode<D, A, F, false>(defender, attacker, filter, cfg, sampler, rng, filter_is_attacker);
    });
    return summarize(std::move(results), keep_episodes);
}

template <DefenderPolicy D, AttackerPolicy A>
BatchStats run_episodes(const D& defender, const A& attacker, const GameConfig& cfg, int count,
                        std::uint64_t seed, int workers = worker_count(), bool keep_episodes = false) {
    return run_episodes(defender, attacker, attacker, true, cfg, count, seed, workers, keep_episodes);
}

/// Mixtures played by sampling one member per player at the start of each
/// episode. The sampled attacker still gates on the defender average, and the
/// defender's filter models the attacker average.
inline BatchStats run_episodes_sampled(const MixedStrategy& defender_mix, const MixedStrategy& attacker_mix,
                                       const GameConfig& cfg, int count, std::uint64_t seed,
                                       int workers = worker_count()) {
    const ObservationSampler sampler(cfg.obs);
    const DefenderMixturePolicy defender_avg(defender_mix);
    const AttackerMixturePolicy filter(attacker_mix, defender_avg);
    std::vector<EpisodeSummary> results(static_cast<size_t>(std::max(count, 0)));
    parallel_for(count, workers, [&](int i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const DefenderMixturePolicy d(MixedStrategy(sample_member(defender_mix, rng)));
        const AttackerMixturePolicy a(MixedStrategy(sample_member(attacker_mix, rng)), defender_avg);
        results[static_cast<size_t>(i)] = play_episode<DefenderMixturePolicy, AttackerMixturePolicy,
                                                       AttackerMixturePolicy, false>(d, a, filter, cfg, sampler,
                                                                                     rng, false);
    });
    return summarize(std::move(results), false);
}

}  // namespace stopgame
