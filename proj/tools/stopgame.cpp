#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "stopgame/exploitability.hpp"
#include "stopgame/io.hpp"
#include "stopgame/minimax.hpp"
#include "stopgame/obs_model.hpp"
#include "stopgame/structure.hpp"
#include "stopgame/tfp.hpp"

using namespace stopgame;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kNoConvergence = 3;

// Accepts a full experiment file or a bare game config.
ExperimentSpec load_config(const fs::path& path) {
    const json j = read_json_file(path);
    if (j.is_object() && j.contains("game")) return experiment_spec_from_json(j, path.parent_path());
    ExperimentSpec spec;
    spec.game = game_config_from_json(j, path.parent_path());
    return spec;
}

fs::path buffer_path(const fs::path& dir, Player p, std::uint64_t seed) {
    return dir / ((p == Player::Defender ? "defender_seed" : "attacker_seed") + std::to_string(seed) + ".json");
}

int fit_obs(const std::string& trace, int k0, int k1, int n, const std::string& out) {
    TraceDataset ds;
    try {
        ds = ingest_trace(trace);
    } catch (const ParseError& e) {
        std::cerr << "error: " << trace << ":" << e.line() << ": " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    FittedObservationModel fitted;
    try {
        fitted = fit_observation_model(ds, k0, k1, n);
    } catch (const DomainError& e) {
        std::cerr << "error: fit failed: " << e.what() << "\n";
        return kNoConvergence;
    }
    write_text_file(out, to_json(fitted.model).dump(2) + "\n");
    std::cout << "samples: " << ds.samples0.size() << " (s=0), " << ds.samples1.size() << " (s=1)\n";
    for (const auto* fit : {&fitted.fit0, &fitted.fit1}) {
        std::cout << (fit == &fitted.fit0 ? "s=0" : "s=1") << " mixture:";
        for (const auto& g : fit->components)
            std::cout << " [w=" << g.weight << " mu=" << g.mean << " sd=" << std::sqrt(g.variance) << "]";
        if (fit->variance_floored) std::cout << " (variance floored)";
        std::cout << "\n";
    }
    const auto tp2 = check_tp2(fitted.model);
    if (tp2.pass)
        std::cout << "TP2: ok\n";
    else
        std::cout << "warning: TP2 check failed, " << tp2.violating_minors << " negative minors\n";
    std::cout << "wrote " << out << "\n";
    return kOk;
}

void write_aggregate_csv(std::ostream& os, const std::vector<std::vector<TfpMetrics>>& runs) {
    using Field = double TfpMetrics::*;
    const std::pair<const char*, Field> fields[] = {{"exploitability", &TfpMetrics::exploitability},
                                                    {"J1_vs_br_attacker", &TfpMetrics::J1_vs_br_attacker},
                                                    {"J1_defender_mix", &TfpMetrics::J1_defender_mix},
                                                    {"mean_T", &TfpMetrics::mean_T},
                                                    {"mean_intrusion_len", &TfpMetrics::mean_intrusion_len}};
    size_t rows = 0;
    for (const auto& r : runs) rows = std::max(rows, r.size());
    os << "iter,runs";
    for (const auto& [name, f] : fields) os << ',' << name << "_mean," << name << "_ci95";
    os << '\n';
    for (size_t t = 0; t < rows; ++t) {
        int present = 0, iter = 0;
        for (const auto& r : runs)
            if (t < r.size()) {
                ++present;
                iter = r[t].iter;
            }
        os << iter << ',' << present;
        for (const auto& [name, f] : fields) {
            std::vector<double> xs;
            for (const auto& r : runs)
                if (t < r.size() && !std::isnan(r[t].*f)) xs.push_back(r[t].*f);
            double mean = std::numeric_limits<double>::quiet_NaN(), ci = mean;
            if (!xs.empty()) {
                mean = 0.0;
                for (double x : xs) mean += x;
                mean /= static_cast<double>(xs.size());
                ci = 0.0;
                if (xs.size() > 1) {
                    double ss = 0.0;
                    for (double x : xs) ss += (x - mean) * (x - mean);
                    const double k = static_cast<double>(xs.size());
                    ci = 1.96 * std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
                }
            }
            os << ',' << format_double(mean) << ',' << format_double(ci);
        }
        os << '\n';
    }
}

int train(const std::string& config, const std::string& out) {
    ExperimentSpec spec;
    try {
        spec = load_config(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    const fs::path dir(out);
    std::vector<std::vector<TfpMetrics>> runs;
    for (const auto seed : spec.seeds) {
        auto progress = [&](const TfpMetrics& m) {
            if (!std::isnan(m.exploitability))
                std::cerr << "seed " << seed << " iter " << m.iter << " exploitability " << m.exploitability << "\n";
        };
        const auto state = run_tfp(spec.game, spec.spsa, spec.delta, spec.max_iters, spec.eval, seed, spec.learn, progress);
        std::ostringstream curve;
        write_learning_curve_csv(curve, state.history);
        write_text_file(dir / ("curve_seed" + std::to_string(seed) + ".csv"), curve.str());
        write_text_file(buffer_path(dir, Player::Defender, seed), to_json(state.defender).dump() + "\n");
        write_text_file(buffer_path(dir, Player::Attacker, seed), to_json(state.attacker).dump() + "\n");
        std::cout << "seed " << seed << ": " << state.iteration << " iterations, exploitability "
                  << state.exploitability_now << (state.converged ? " (below delta)" : "") << "\n";
        runs.push_back(state.history);
    }
    std::ostringstream agg;
    write_aggregate_csv(agg, runs);
    write_text_file(dir / "aggregate.csv", agg.str());
    std::cout << "wrote " << runs.size() << " curves and aggregate.csv to " << dir.string() << "\n";
    return kOk;
}

struct TfpBuffers {
    MixedStrategy defender{Player::Defender, {}};
    MixedStrategy attacker{Player::Attacker, {}};
};

template <class D, class A, class F>
BatchStats play(const D& defender, const A& attacker, const F& filter, bool filter_is_attacker,
                const ExperimentSpec& spec, int episodes) {
    const std::uint64_t seed = derive_seed(spec.seeds.front(), 0xE7A1);
    return run_episodes(defender, attacker, filter, filter_is_attacker, spec.game, episodes, seed);
}

template <class D>
BatchStats against(const D& defender, const std::string& attacker, const std::optional<TfpBuffers>& tfp,
                   const ExperimentSpec& spec, int episodes) {
    const BeliefGrid grid(spec.eval.grid);
    if (attacker == "tfp") {
        const DefenderMixturePolicy perceived(tfp->defender);
        const AttackerMixturePolicy att(tfp->attacker, perceived);
        return play(defender, att, att, true, spec, episodes);
    }
    if (tfp) {
        const AttackerMixturePolicy filter(tfp->attacker, DefenderMixturePolicy(tfp->defender));
        const TabularAttackerPolicy br(attacker_best_response_vi(defender, filter, spec.game, grid, spec.eval.vi));
        return play(defender, br, filter, false, spec, episodes);
    }
    const ConstantAttackerPolicy filter{};
    const TabularAttackerPolicy br(attacker_best_response_vi(defender, filter, spec.game, grid, spec.eval.vi));
    return play(defender, br, filter, false, spec, episodes);
}

int evaluate(const std::string& config, const std::string& defender, const std::string& attacker, int episodes) {
    if (episodes <= 0) {
        std::cerr << "error: --episodes must be positive\n";
        return kInputError;
    }
    ExperimentSpec spec;
    try {
        spec = load_config(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    std::optional<TfpBuffers> tfp;
    if (defender == "tfp" || attacker == "tfp") {
        const auto seed = spec.seeds.front();
        try {
            tfp = TfpBuffers{mixed_strategy_from_json(read_json_file(buffer_path(spec.outputs, Player::Defender, seed))),
                             mixed_strategy_from_json(read_json_file(buffer_path(spec.outputs, Player::Attacker, seed)))};
        } catch (const std::exception& e) {
            std::cerr << "error: missing T-FP strategies (run train with --out " << spec.outputs.string()
                      << "): " << e.what() << "\n";
            return kInputError;
        }
    }
    BatchStats stats;
    if (defender == "tfp")
        stats = against(DefenderMixturePolicy(tfp->defender), attacker, tfp, spec, episodes);
    else
        stats = against(BaselineDefenderPolicy(defender == "oracle" ? BaselineKind::OracleIntrusionTime
                                                                    : BaselineKind::AlertOnAny),
                        attacker, attacker == "tfp" ? tfp : std::nullopt, spec, episodes);

    const std::pair<const char*, std::pair<double, double>> rows[] = {
        {"reward", {stats.mean_return, stats.ci95(stats.sd_return)}},
        {"length", {stats.mean_length, stats.ci95(stats.sd_length)}},
        {"intrusion_length", {stats.mean_intrusion_length, stats.ci95(stats.sd_intrusion_length)}}};
    std::ostringstream csv;
    csv << "defender,attacker,episodes,metric,mean,ci95\n";
    for (const auto& [name, v] : rows) {
        std::cout << name << ": " << v.first << " +- " << v.second << "\n";
        csv << defender << ',' << attacker << ',' << episodes << ',' << name << ',' << format_double(v.first) << ','
            << format_double(v.second) << '\n';
    }
    const fs::path path = spec.outputs / ("evaluate_" + defender + "_vs_" + attacker + ".csv");
    write_text_file(path, csv.str());
    std::cout << "wrote " << path.string() << "\n";
    return kOk;
}

int value(const std::string& config, int grid, const std::string& out) {
    ExperimentSpec spec;
    try {
        spec = load_config(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    const auto sol = minimax_value_iteration(spec.game, BeliefGrid(grid), spec.eval.vi);
    if (!sol.converged) {
        std::cerr << "error: value iteration did not converge after " << sol.iterations << " sweeps (residual "
                  << sol.residual << ")\n";
        return kNoConvergence;
    }
    std::ostringstream csv;
    sol.write_values_csv(csv);
    write_text_file(out, csv.str());
    std::cout << "converged in " << sol.iterations << " sweeps, V(l=" << spec.game.L
              << ", b=0) = " << sol.value(0, spec.game.L, 0) << "\nwrote " << out << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver suite for the intrusion-prevention stopping game"};
    app.require_subcommand(1);

    std::string trace, out, config, defender, attacker;
    int k0 = 2, k1 = 3, n = 100, episodes = 1000, grid = 100;

    auto* fit = app.add_subcommand("fit-obs", "Fit an observation model to an alert trace");
    fit->add_option("--trace", trace, "CSV with columns state,observation")->required();
    fit->add_option("--k0", k0, "mixture components for s=0")->capture_default_str();
    fit->add_option("--k1", k1, "mixture components for s=1")->capture_default_str();
    fit->add_option("--n", n, "alphabet size")->capture_default_str();
    fit->add_option("--out", out, "model JSON to write")->required();

    auto* tr = app.add_subcommand("train", "Run threshold fictitious play for every seed");
    tr->add_option("--config", config, "experiment JSON")->required();
    tr->add_option("--out", out, "output directory")->required();

    auto* ev = app.add_subcommand("evaluate", "Simulate a defender against an attacker");
    ev->add_option("--config", config, "experiment JSON")->required();
    ev->add_option("--defender", defender)->required()->check(CLI::IsMember({"tfp", "alert-any", "oracle"}));
    ev->add_option("--attacker", attacker)->required()->check(CLI::IsMember({"tfp", "br"}));
    ev->add_option("--episodes", episodes)->capture_default_str();

    auto* va = app.add_subcommand("value", "Minimax value iteration on a belief grid");
    va->add_option("--config", config, "game or experiment JSON")->required();
    va->add_option("--grid", grid, "grid intervals K")->capture_default_str()->check(CLI::PositiveNumber);
    va->add_option("--out", out, "values CSV to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*fit) return fit_obs(trace, k0, k1, n, out);
        if (*tr) return train(config, out);
        if (*ev) return evaluate(config, defender, attacker, episodes);
        return value(config, grid, out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
