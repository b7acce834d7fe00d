#pragma once

// JSON and CSV serialization for configurations, observation models,
// strategies and experiment specifications.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopgame/game.hpp"
#include "stopgame/spsa.hpp"
#include "stopgame/strategies.hpp"
#include "stopgame/tfp.hpp"

namespace stopgame {

using json = nlohmann::json;

/// Raised for malformed or invalid input documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

inline json to_json(const ObservationModel& m) { return json{{"n", m.size()}, {"pmf0", m.pmf0}, {"pmf1", m.pmf1}}; }

/// Accepts {n, pmf0, pmf1} or the synthetic family {n, family: "beta-binomial"}.
inline ObservationModel observation_model_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("obs: expected an object");
    ObservationModel m;
    if (j.contains("family")) {
        if (j.at("family") != "beta-binomial") throw ConfigError("obs: unknown family");
        m = beta_binomial_model(j.at("n").get<int>());
    } else {
        m.pmf0 = j.at("pmf0").get<std::vector<double>>();
        m.pmf1 = j.at("pmf1").get<std::vector<double>>();
    }
    if (j.contains("n") && j.at("n").get<int>() != m.size()) throw ConfigError("obs: n does not match the pmf length");
    try {
        m.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return m;
}

inline json to_json(const GameConfig& cfg) {
    return json{{"L", cfg.L},         {"R_st", cfg.R_st}, {"R_cost", cfg.R_cost},
                {"R_int", cfg.R_int}, {"gamma", cfg.gamma}, {"phi", cfg.phi},
                {"obs", to_json(cfg.obs)}, {"horizon_cap", cfg.horizon_cap}, {"seed", cfg.seed}};
}

/// `base` resolves an `obs` given as a path to a model file.
inline GameConfig game_config_from_json(const json& j, const std::filesystem::path& base = {}) {
    try {
        GameConfig cfg;
        cfg.L = j.value("L", cfg.L);
        cfg.R_st = j.value("R_st", cfg.R_st);
        cfg.R_cost = j.value("R_cost", cfg.R_cost);
        cfg.R_int = j.value("R_int", cfg.R_int);
        cfg.gamma = j.value("gamma", cfg.gamma);
        cfg.horizon_cap = j.value("horizon_cap", cfg.horizon_cap);
        cfg.seed = j.value("seed", cfg.seed);
        const json phi = j.value("phi", json("half-inverse"));
        if (phi.is_string()) {
            if (phi != "half-inverse") throw ConfigError("phi: expected an array or \"half-inverse\"");
            cfg.phi = GameConfig::half_inverse_phi(cfg.L);
        } else {
            cfg.phi = phi.get<std::vector<double>>();
        }
        if (!j.contains("obs")) throw ConfigError("game: missing obs");
        const json& obs = j.at("obs");
        cfg.obs = obs.is_string() ? observation_model_from_json(read_json_file(base / obs.get<std::string>()))
                                  : observation_model_from_json(obs);
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("game: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

inline json to_json(const ThresholdStrategy& s) {
    return json{{"player", to_string(s.player)}, {"steepness", s.steepness}, {"theta", s.theta}};
}

inline ThresholdStrategy threshold_strategy_from_json(const json& j) {
    ThresholdStrategy s;
    s.player = player_from_string(j.at("player").get<std::string>());
    s.steepness = j.value("steepness", kDefaultSteepness);
    s.gate_floor = j.value("gate_floor", kDefaultGateFloor);
    s.theta = j.at("theta").get<std::vector<double>>();
    return s;
}

inline json to_json(const MixedStrategy& m) {
    json buf = json::array();
    for (const auto& s : m.buffer) buf.push_back(s.theta);
    json j{{"player", to_string(m.player)}, {"buffer", buf}};
    if (!m.buffer.empty()) {
        j["steepness"] = m.buffer.front().steepness;
        if (m.player == Player::Attacker) j["gate_floor"] = m.buffer.front().gate_floor;
    }
    return j;
}

inline MixedStrategy mixed_strategy_from_json(const json& j) {
    try {
        MixedStrategy m;
        m.player = player_from_string(j.at("player").get<std::string>());
        const double k = j.value("steepness", kDefaultSteepness);
        const double floor = j.value("gate_floor", kDefaultGateFloor);
        for (const auto& theta : j.at("buffer"))
            m.append(ThresholdStrategy{m.player, theta.get<std::vector<double>>(), k, floor});
        m.require_nonempty();
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("strategy buffer: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

inline SpsaConfig spsa_config_from_json(const json& j) {
    SpsaConfig s;
    s.a = j.value("a", s.a);
    s.c = j.value("c", s.c);
    s.eps = j.value("eps", s.eps);
    s.lambda = j.value("lambda", s.lambda);
    s.A = j.value("A", s.A);
    s.N = j.value("N", s.N);
    s.episodes_per_eval = j.value("episodes_per_eval", s.episodes_per_eval);
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline json to_json(const SpsaConfig& s) {
    return json{{"a", s.a},     {"c", s.c}, {"eps", s.eps}, {"lambda", s.lambda},
                {"A", s.A},     {"N", s.N}, {"episodes_per_eval", s.episodes_per_eval}};
}

/// Training and evaluation protocol read by the command-line tool.
struct ExperimentSpec {
    GameConfig game;
    TfpSpsa spsa;
    LearnOptions learn;
    TfpEvalConfig eval;
    double delta = 0.01;
    int max_iters = 100;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path outputs = "out";
};

inline ExperimentSpec experiment_spec_from_json(const json& j, const std::filesystem::path& base = {}) {
    try {
        ExperimentSpec spec;
        if (!j.contains("game")) throw ConfigError("experiment: missing game");
        const json& game = j.at("game");
        if (game.is_string()) {
            const auto path = base / game.get<std::string>();
            spec.game = game_config_from_json(read_json_file(path), path.parent_path());
        } else {
            spec.game = game_config_from_json(game, base);
        }
        spec.spsa.defender = spsa_config_from_json(j.value("spsa", json::object()));
        spec.spsa.attacker = j.contains("spsa_attacker") ? spsa_config_from_json(j.at("spsa_attacker")) : spec.spsa.defender;
        const json learn = j.value("learn", json::object());
        spec.learn.steepness = learn.value("steepness", spec.learn.steepness);
        spec.learn.gate_floor = learn.value("gate_floor", spec.learn.gate_floor);
        const json ev = j.value("eval", json::object());
        spec.eval.grid = ev.value("grid", spec.eval.grid);
        spec.eval.vi.tol = ev.value("tol", spec.eval.vi.tol);
        spec.eval.vi.max_sweeps = ev.value("max_sweeps", spec.eval.vi.max_sweeps);
        spec.eval.stride = ev.value("stride", spec.eval.stride);
        spec.eval.eval_episodes = ev.value("eval_episodes", spec.eval.eval_episodes);
        spec.delta = ev.value("delta", spec.delta);
        spec.max_iters = ev.value("max_iters", spec.max_iters);
        spec.seeds = ev.value("seeds", spec.seeds);
        spec.outputs = base / j.value("outputs", spec.outputs.string());
        if (spec.seeds.empty()) throw ConfigError("eval.seeds must be nonempty");
        if (spec.eval.grid < 1) throw ConfigError("eval.grid must be positive");
        if (!(spec.eval.vi.tol > 0.0)) throw ConfigError("eval.tol must be positive");
        if (!(spec.delta > 0.0)) throw ConfigError("eval.delta must be positive");
        if (spec.max_iters < 0) throw ConfigError("eval.max_iters must be nonnegative");
        if (spec.eval.stride < 1) throw ConfigError("eval.stride must be at least 1");
        if (!(spec.learn.steepness > 0.0)) throw ConfigError("learn.steepness must be positive");
        if (!(spec.learn.gate_floor >= 0.0 && spec.learn.gate_floor < 0.5))
            throw ConfigError("learn.gate_floor must lie in [0, 0.5)");
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
}

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    return experiment_spec_from_json(read_json_file(path), path.parent_path());
}

}  // namespace stopgame
