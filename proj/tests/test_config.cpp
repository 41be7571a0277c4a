#include <doctest.h>

#include <string>

#include "mvsde/config.hpp"

using namespace mvsde;

TEST_CASE("experiment names round-trip") {
  for (auto e : {Experiment::simulate, Experiment::chaos, Experiment::euler_rate,
                 Experiment::fg_rate, Experiment::picard, Experiment::yw_check,
                 Experiment::wasserstein}) {
    CHECK(experiment_from(experiment_name(e)) == e);
  }
  CHECK_THROWS_AS(experiment_from("frobnicate"), ConfigError);
}

TEST_CASE("defaults are the documented study grids") {
  auto sim = default_config(Experiment::simulate);
  CHECK(sim.T == 1.0);
  CHECK(sim.R == 16);
  CHECK(sim.p == 2.0);
  CHECK(sim.h == 1.0 / 256);
  CHECK(sim.N == 64);
  CHECK(sim.pool_factor == 64);

  auto chaos = default_config(Experiment::chaos);
  CHECK(chaos.N_list == std::vector<int>{8, 32, 128});
  CHECK(chaos.model == "M_CHAOS");

  auto euler = default_config(Experiment::euler_rate);
  CHECK(euler.N == 256);
  CHECK(euler.h_list.size() == 5);
  CHECK(euler.h_ref == 0x1.0p-11);

  auto fg = default_config(Experiment::fg_rate);
  CHECK(fg.N_list == std::vector<int>{16, 64, 256, 1024});

  auto picard = default_config(Experiment::picard);
  CHECK(picard.M == 512);
  CHECK(picard.tol == 1e-3);
  CHECK(picard.k_max == 10);
}

TEST_CASE("round trip for every experiment") {
  for (auto e : {Experiment::simulate, Experiment::chaos, Experiment::euler_rate,
                 Experiment::fg_rate, Experiment::picard, Experiment::yw_check,
                 Experiment::wasserstein}) {
    RunConfig cfg = default_config(e);
    if (e == Experiment::wasserstein) {
      cfg.input_a = "a.csv";
      cfg.input_b = "b.csv";
    }
    RunConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
  }
}

TEST_CASE("round trip preserves custom values") {
  RunConfig cfg = default_config(Experiment::chaos);
  cfg.model = "M_CHAOS";
  cfg.params = {{"a", 2.0}, {"c", 0.25}};
  cfg.init = InitialLaw::uniform(-1.0, 1.0);
  cfg.N_list = {4, 16, 64, 256};
  cfg.R = 8;
  cfg.p = 1.0;
  cfg.h = 0x1.0p-6;
  cfg.master_seed = 987654321;
  CHECK(parse_config(serialize_config(cfg)) == cfg);
}

TEST_CASE("minimal chaos document gets defaults filled") {
  auto cfg = parse_config(R"({"experiment": "chaos", "model": "M_CHAOS"})");
  CHECK(cfg.experiment == Experiment::chaos);
  CHECK(cfg.N_list == std::vector<int>{8, 32, 128});
  CHECK(cfg.T == 1.0);
  CHECK(cfg.R == 16);
  CHECK(cfg.p == 2.0);
  CHECK(cfg.pool_factor == 64);
}

TEST_CASE("experiment key is mandatory") {
  CHECK_THROWS_AS(parse_config(R"({"model": "M_OU"})"), ConfigError);
}

TEST_CASE("unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"experiment": "simulate", "particles": 4})"),
                       doctest::Contains("particles"), ConfigError);
  // Keys of other experiments do not leak in.
  CHECK_THROWS_AS(parse_config(R"({"experiment": "simulate", "k_max": 3})"), ConfigError);
}

TEST_CASE("duplicate keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"experiment": "simulate", "T": 1, "T": 2})"),
                       doctest::Contains("duplicate key 'T'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"experiment": "simulate", "init": {"family": "point", "family": "point"}})"),
      doctest::Contains("$.init"), ConfigError);
}

TEST_CASE("malformed documents report the byte offset") {
  CHECK_THROWS_WITH_AS(parse_config("{\"experiment\": \"simulate\",,}"),
                       doctest::Contains("byte"), ConfigError);
  CHECK_THROWS_AS(parse_config(""), ConfigError);
}

TEST_CASE("range validation") {
  CHECK_THROWS_AS(parse_config(R"({"experiment": "simulate", "T": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "simulate", "N": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "chaos", "p": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "chaos", "R": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "picard", "tol": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "yw-check", "eps_max": 0.7})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "fg-rate", "N_list": [16, 64]})"), ConfigError);
}

TEST_CASE("dyadic step validation for the rate study") {
  // 0.3 is not a power of two.
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"experiment": "euler-rate", "h_list": [0.25, 0.3], "h_ref": 0.001953125})"),
      doctest::Contains("h_list"), ConfigError);
  // h_ref must sit at least 4x below the smallest step.
  CHECK_THROWS_AS(
      parse_config(R"({"experiment": "euler-rate", "h_list": [0.25], "h_ref": 0.125})"),
      ConfigError);
  auto ok = parse_config(
      R"({"experiment": "euler-rate", "h_list": [0.25, 0.125], "h_ref": 0.015625})");
  CHECK(ok.h_list == std::vector<double>{0.25, 0.125});
}

TEST_CASE("simulate accepts a non-dyadic h") {
  auto cfg = parse_config(R"({"experiment": "simulate", "h": 0.01})");
  CHECK(cfg.h == 0.01);
}

TEST_CASE("init families parse and validate") {
  auto cfg = parse_config(
      R"({"experiment": "simulate", "init": {"family": "uniform", "lo": -2, "hi": 2}})");
  CHECK(cfg.init == InitialLaw::uniform(-2.0, 2.0));
  cfg = parse_config(R"({"experiment": "simulate", "init": {"family": "point", "value": 1.5}})");
  CHECK(cfg.init == InitialLaw::point(1.5));
  CHECK_THROWS_AS(
      parse_config(R"({"experiment": "simulate", "init": {"family": "cauchy"}})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment": "simulate", "init": {"family": "gaussian", "sd": -1}})"),
      ConfigError);
}

TEST_CASE("wasserstein requires both inputs") {
  CHECK_THROWS_AS(parse_config(R"({"experiment": "wasserstein", "input_a": "a.csv"})"),
                  ConfigError);
  auto cfg = parse_config(
      R"({"experiment": "wasserstein", "input_a": "a.csv", "input_b": "b.csv", "p": 1})");
  CHECK(cfg.p == 1.0);
}

TEST_CASE("model params must be numeric") {
  CHECK_THROWS_AS(
      parse_config(R"({"experiment": "simulate", "params": {"a": "fast"}})"), ConfigError);
}
