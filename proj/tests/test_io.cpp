#include <gtest/gtest.h>

#include <filesystem>

#include "stopgame/io.hpp"

using namespace stopgame;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stopgame_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Json, GameConfigRoundTrip) {
    const GameConfig cfg = desk_config();
    const GameConfig back = game_config_from_json(to_json(cfg));
    EXPECT_EQ(back.L, cfg.L);
    EXPECT_EQ(back.gamma, cfg.gamma);
    EXPECT_EQ(back.R_st, cfg.R_st);
    EXPECT_EQ(back.R_cost, cfg.R_cost);
    EXPECT_EQ(back.R_int, cfg.R_int);
    EXPECT_EQ(back.phi, cfg.phi);
    EXPECT_EQ(back.obs.pmf0, cfg.obs.pmf0);
    EXPECT_EQ(back.obs.pmf1, cfg.obs.pmf1);
    EXPECT_EQ(back.horizon_cap, cfg.horizon_cap);
}

TEST(Json, GameDefaultsAndFamily) {
    const auto cfg = game_config_from_json(json::parse(R"({"L": 3, "obs": {"family": "beta-binomial", "n": 11}})"));
    EXPECT_EQ(cfg.obs.size(), 11);
    EXPECT_EQ(cfg.phi, GameConfig::half_inverse_phi(3));
    EXPECT_EQ(cfg.gamma, 0.99);
    EXPECT_EQ(cfg.R_st, 20.0);
}

TEST(Json, GameErrors) {
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 3})")), ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 0, "obs": {"family": "beta-binomial", "n": 5}})")),
                 ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "gamma": 1.5, "obs": {"pmf0": [0.5, 0.5], "pmf1": [0.5, 0.5]}})")),
                 ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "obs": {"pmf0": [0.5, 0.6], "pmf1": [0.5, 0.5]}})")),
                 ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "obs": {"n": 3, "pmf0": [0.5, 0.5], "pmf1": [0.5, 0.5]}})")),
                 ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "phi": [0.5], "obs": {"family": "beta-binomial", "n": 4}})")),
                 ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "obs": {"family": "poisson", "n": 4}})")), ConfigError);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": "two", "obs": {"family": "beta-binomial", "n": 4}})")),
                 ConfigError);
}

TEST(Json, ObservationModelFromFile) {
    const auto dir = scratch_dir("obs");
    write_text_file(dir / "obs.json", to_json(beta_binomial_model(6)).dump());
    const auto cfg = game_config_from_json(json::parse(R"({"L": 2, "obs": "obs.json"})"), dir);
    EXPECT_EQ(cfg.obs.pmf1, beta_binomial_model(6).pmf1);
    EXPECT_THROW(game_config_from_json(json::parse(R"({"L": 2, "obs": "missing.json"})"), dir), ConfigError);
}

TEST(Json, MixedStrategyRoundTrip) {
    MixedStrategy m(Player::Attacker, {{Player::Attacker, {0.1, -2.0, 3.5, 0.0, 1e-17, -7.25}},
                                       {Player::Attacker, {1.0, 1.0, 1.0, -1.0, -1.0, -1.0}}});
    const auto back = mixed_strategy_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(back.player, Player::Attacker);
    ASSERT_EQ(back.size(), 2u);
    for (size_t i = 0; i < 2; ++i) EXPECT_EQ(back.buffer[i].theta, m.buffer[i].theta);
    EXPECT_EQ(back.buffer[0].steepness, kDefaultSteepness);
    EXPECT_EQ(back.buffer[0].gate_floor, kDefaultGateFloor);
}

TEST(Json, MixedStrategyErrors) {
    EXPECT_THROW(mixed_strategy_from_json(json::parse(R"({"player": "defender", "buffer": []})")), ConfigError);
    EXPECT_THROW(mixed_strategy_from_json(json::parse(R"({"player": "defender", "buffer": [[1, 2], [1]]})")),
                 ConfigError);
    EXPECT_THROW(mixed_strategy_from_json(json::parse(R"({"player": "referee", "buffer": [[1]]})")), std::exception);
    EXPECT_THROW(mixed_strategy_from_json(json::parse(R"({"buffer": [[1]]})")), ConfigError);
}

TEST(Json, SpsaRoundTripAndValidation) {
    SpsaConfig s;
    s.a = 3.5;
    s.N = 7;
    const auto back = spsa_config_from_json(to_json(s));
    EXPECT_EQ(back.a, 3.5);
    EXPECT_EQ(back.N, 7);
    EXPECT_EQ(back.c, s.c);
    EXPECT_THROW(spsa_config_from_json(json::parse(R"({"N": 0})")), ConfigError);
    EXPECT_THROW(spsa_config_from_json(json::parse(R"({"a": -1})")), ConfigError);
}

TEST(Experiment, ParsesFullSpec) {
    const auto dir = scratch_dir("spec");
    const auto j = json::parse(R"({
        "game": {"L": 3, "obs": {"family": "beta-binomial", "n": 11}},
        "spsa": {"a": 10, "c": 20},
        "spsa_attacker": {"a": 100, "eps": 0.602, "lambda": 0.101},
        "eval": {"grid": 50, "delta": 0.05, "max_iters": 7, "seeds": [3, 4], "stride": 2},
        "outputs": "runs"
    })");
    const auto spec = experiment_spec_from_json(j, dir);
    EXPECT_EQ(spec.game.L, 3);
    EXPECT_EQ(spec.spsa.defender.a, 10.0);
    EXPECT_EQ(spec.spsa.defender.c, 20.0);
    EXPECT_EQ(spec.spsa.attacker.a, 100.0);
    EXPECT_EQ(spec.spsa.attacker.c, SpsaConfig{}.c);
    EXPECT_EQ(spec.spsa.attacker.eps, 0.602);
    EXPECT_EQ(spec.eval.grid, 50);
    EXPECT_EQ(spec.eval.stride, 2);
    EXPECT_EQ(spec.delta, 0.05);
    EXPECT_EQ(spec.max_iters, 7);
    EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(spec.outputs, dir / "runs");
}

TEST(Experiment, AttackerSpsaDefaultsToShared) {
    const auto spec = experiment_spec_from_json(
        json::parse(R"({"game": {"L": 2, "obs": {"family": "beta-binomial", "n": 4}}, "spsa": {"a": 2}})"));
    EXPECT_EQ(spec.spsa.attacker.a, 2.0);
}

TEST(Experiment, GameByPath) {
    const auto dir = scratch_dir("gamepath");
    write_text_file(dir / "sub" / "game.json", to_json(desk_config()).dump());
    write_text_file(dir / "exp.json", R"({"game": "sub/game.json", "eval": {"seeds": [1]}})");
    const auto spec = load_experiment_spec(dir / "exp.json");
    EXPECT_EQ(spec.game.L, 3);
}

TEST(Experiment, Errors) {
    const std::string game = R"("game": {"L": 2, "obs": {"family": "beta-binomial", "n": 4}})";
    EXPECT_THROW(experiment_spec_from_json(json::parse("{}")), ConfigError);
    EXPECT_THROW(experiment_spec_from_json(json::parse("{" + game + R"(, "eval": {"seeds": []}})")), ConfigError);
    EXPECT_THROW(experiment_spec_from_json(json::parse("{" + game + R"(, "eval": {"delta": 0}})")), ConfigError);
    EXPECT_THROW(experiment_spec_from_json(json::parse("{" + game + R"(, "eval": {"grid": 0}})")), ConfigError);
    EXPECT_THROW(experiment_spec_from_json(json::parse("{" + game + R"(, "spsa_attacker": {"N": 0}})")), ConfigError);
    EXPECT_THROW(load_experiment_spec("/nonexistent/spec.json"), ConfigError);
    const auto dir = scratch_dir("bad");
    write_text_file(dir / "bad.json", "{not json");
    EXPECT_THROW(load_experiment_spec(dir / "bad.json"), ConfigError);
}
