#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mvsde/config.hpp"
#include "mvsde/csv.hpp"
#include "mvsde/rng.hpp"
#include "mvsde/runner.hpp"

using namespace mvsde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "mvsde-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code = -1;
  std::string output;
};

// Runs the installed binary through the shell; output captured to a file.
CliResult run_cli(const std::string& args, const std::string& env = "") {
  auto out_file = fs::temp_directory_path() / "mvsde-cli-tests" / "last-output.txt";
  fs::create_directories(out_file.parent_path());
  std::string cmd = env + (env.empty() ? "" : " ") + MVSDE_CLI_PATH + " " + args + " > " +
                    out_file.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  r.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

TEST_CASE("kernel bound probe run produces a full artifact set") {
  auto out = fresh_dir("yw");
  RunConfig cfg = default_config(Experiment::yw_check);
  cfg.probes = 20000;
  RunOptions opt;
  opt.out_override = out.string();
  auto outcome = mvsde::run(cfg, opt);

  CHECK(outcome.exit_code == 0);
  REQUIRE(outcome.checks.size() == 1);
  CHECK(outcome.checks[0].name == "yw-bounds");
  CHECK(outcome.checks[0].pass);
  REQUIRE_FALSE(outcome.run_dir.empty());
  CHECK(outcome.run_dir.string().find(out.string()) == 0);

  bool saw_pass_line = false;
  for (const auto& line : outcome.lines)
    if (line.find("yw-check: PASS") != std::string::npos) saw_pass_line = true;
  CHECK(saw_pass_line);

  // Digest in the manifest matches the bytes on disk.
  REQUIRE(outcome.artifacts.size() == 1);
  auto content = csv::read_file(outcome.run_dir / outcome.artifacts[0].filename);
  CHECK(outcome.artifacts[0].digest == hex64(fnv1a64(content.data(), content.size())));

  auto manifest = nlohmann::json::parse(csv::read_file(outcome.run_dir / "manifest.json"));
  CHECK(manifest["experiment"] == "yw-check");
  CHECK(manifest["partial"] == false);
  CHECK(manifest["seed"]["master_seed"] == cfg.master_seed);
  CHECK(manifest["config"]["probes"] == 20000);
  CHECK(manifest["artifacts"].size() == 1);
}

TEST_CASE("noiseless simulate tracks the exponential decay") {
  auto out = fresh_dir("sim");
  RunConfig cfg = default_config(Experiment::simulate);
  cfg.N = 1;
  cfg.h = 0x1.0p-5;
  cfg.init = InitialLaw::point(1.0);
  cfg.params = {{"a", 1.0}, {"c", 0.0},  {"s", 0.0}, {"g0", 0.0},
                {"g1", 0.0}, {"m0", 0.0}, {"m1", 0.0}};
  RunOptions opt;
  opt.out_override = out.string();
  auto outcome = mvsde::run(cfg, opt);
  REQUIRE(outcome.exit_code == 0);

  auto table = csv::parse_table(csv::read_file(outcome.run_dir / "trajectory.csv"));
  REQUIRE(table.header == std::vector<std::string>{"time", "particle", "position"});
  REQUIRE(table.rows.size() == 33);  // 32 steps + initial state, one particle
  for (const auto& row : table.rows) {
    double t = row[0], pos = row[2];
    REQUIRE(std::abs(pos - std::exp(-t)) <= 2.0 * cfg.h);
  }
}

TEST_CASE("chaos without interaction writes an all-zero error column") {
  auto out = fresh_dir("chaos0");
  RunConfig cfg = default_config(Experiment::chaos);
  cfg.model = "M_OU";  // c = 0
  cfg.N_list = {4, 8, 16};
  cfg.R = 4;
  cfg.h = 0x1.0p-4;
  cfg.pool_factor = 8;
  RunOptions opt;
  opt.out_override = out.string();
  opt.threads = 2;
  opt.assert_envelopes = true;
  auto outcome = mvsde::run(cfg, opt);

  CHECK(outcome.exit_code == 0);  // vacuous envelopes must not trip assert mode
  auto table = csv::parse_table(csv::read_file(outcome.run_dir / "rates.csv"));
  REQUIRE(table.header == std::vector<std::string>{"param", "estimate", "se", "R"});
  REQUIRE(table.rows.size() == 3);
  for (const auto& row : table.rows) {
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 0.0);
    CHECK(row[3] == 4.0);
  }
  for (const auto& check : outcome.checks) CHECK(check.pass);
}

TEST_CASE("assert mode turns a failed envelope into exit 1") {
  auto out = fresh_dir("picard-fail");
  RunConfig cfg = default_config(Experiment::picard);
  cfg.M = 32;
  cfg.h = 0x1.0p-4;
  cfg.tol = 1e-12;  // unreachable: iterate gap is Monte Carlo noise
  cfg.k_max = 2;
  RunOptions opt;
  opt.out_override = out.string();
  opt.assert_envelopes = true;
  auto outcome = mvsde::run(cfg, opt);

  CHECK(outcome.exit_code == 1);
  bool saw = false;
  for (const auto& line : outcome.lines)
    if (line.find("assertion failed: picard-converged") != std::string::npos) saw = true;
  CHECK(saw);
  // Same run without assert mode reports the failure but exits 0.
  auto relaxed = mvsde::run(cfg, RunOptions{{}, fresh_dir("picard-fail2").string(), 1, false});
  CHECK(relaxed.exit_code == 0);
  REQUIRE_FALSE(relaxed.checks.empty());
  CHECK_FALSE(relaxed.checks[0].pass);
}

TEST_CASE("transport distance between stored clouds") {
  auto out = fresh_dir("wass");
  auto a = out / "a.csv";
  auto b = out / "b.csv";
  csv::write_file(a, csv::cloud_csv({0.0, 1.0}));
  csv::write_file(b, csv::cloud_csv({0.5, 1.5}));
  RunConfig cfg = default_config(Experiment::wasserstein);
  cfg.input_a = a.string();
  cfg.input_b = b.string();
  RunOptions opt;
  opt.out_override = out.string();
  auto outcome = mvsde::run(cfg, opt);
  REQUIRE(outcome.exit_code == 0);
  auto table = csv::parse_table(csv::read_file(outcome.run_dir / "result.csv"));
  CHECK(table.rows[0][1] == 0.5);
}

TEST_CASE("runtime failures exit 3 and flag the manifest partial") {
  auto out = fresh_dir("wass-bad");
  auto a = out / "a.csv";
  auto b = out / "b.csv";
  csv::write_file(a, "wrong_header\n1\n");
  csv::write_file(b, csv::cloud_csv({0.0}));
  RunConfig cfg = default_config(Experiment::wasserstein);
  cfg.input_a = a.string();
  cfg.input_b = b.string();
  RunOptions opt;
  opt.out_override = out.string();
  auto outcome = mvsde::run(cfg, opt);
  CHECK(outcome.exit_code == 3);
  auto manifest = nlohmann::json::parse(csv::read_file(outcome.run_dir / "manifest.json"));
  CHECK(manifest["partial"] == true);
  CHECK(manifest.contains("error"));
}

TEST_CASE("run directories never collide") {
  auto out = fresh_dir("dedup");
  RunConfig cfg = default_config(Experiment::yw_check);
  cfg.probes = 10;
  RunOptions opt;
  opt.out_override = out.string();
  auto first = mvsde::run(cfg, opt);
  auto second = mvsde::run(cfg, opt);  // same second, same seed: stem collides
  REQUIRE(first.exit_code == 0);
  REQUIRE(second.exit_code == 0);
  CHECK(first.run_dir != second.run_dir);
  CHECK(fs::exists(first.run_dir / "manifest.json"));
  CHECK(fs::exists(second.run_dir / "manifest.json"));
}

TEST_CASE("cli: default kernel probe passes") {
  auto out = fresh_dir("cli-yw");
  auto r = run_cli("yw-check --seed 5 --out " + out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("yw-check: PASS") != std::string::npos);
  CHECK(r.output.find("run-dir:") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
  auto out = fresh_dir("cli-usage");
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("simulate --no-such-flag").code == 2);
  CHECK(run_cli("simulate --config " + (out / "missing.json").string()).code == 2);
  CHECK(run_cli("wasserstein --input-a " + (out / "nope.csv").string() + " --input-b " +
                (out / "nope.csv").string())
            .code == 2);
  CHECK(run_cli("simulate --threads 0").code == 2);

  auto bad = out / "bad.json";
  csv::write_file(bad, "{\"experiment\": \"simulate\",,}\n");
  auto r = run_cli("simulate --config " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("byte") != std::string::npos);

  // Config written for one experiment cannot drive another subcommand.
  auto chaos_cfg = out / "chaos.json";
  csv::write_file(chaos_cfg, serialize_config(default_config(Experiment::chaos)));
  CHECK(run_cli("euler-rate --config " + chaos_cfg.string()).code == 2);
}

TEST_CASE("cli: out-of-range config values exit 2") {
  auto out = fresh_dir("cli-range");
  auto cfg_path = out / "bad-range.json";
  csv::write_file(cfg_path, R"({"experiment": "simulate", "T": -3})");
  auto r = run_cli("simulate --config " + cfg_path.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("T") != std::string::npos);
}

TEST_CASE("cli: byte-identical artifacts across thread counts") {
  auto out1 = fresh_dir("cli-det1");
  auto out8 = fresh_dir("cli-det8");
  auto cfg_path = fresh_dir("cli-det-cfg") / "chaos.json";
  RunConfig cfg = default_config(Experiment::chaos);
  cfg.N_list = {4, 8, 16};
  cfg.R = 4;
  cfg.h = 0x1.0p-5;
  cfg.pool_factor = 8;
  csv::write_file(cfg_path, serialize_config(cfg));

  auto r1 = run_cli("chaos --config " + cfg_path.string() + " --seed 7 --threads 1 --out " +
                    out1.string());
  auto r8 = run_cli("chaos --config " + cfg_path.string() + " --seed 7 --threads 8 --out " +
                    out8.string());
  REQUIRE(r1.code == 0);
  REQUIRE(r8.code == 0);

  auto find_run_dir = [](const fs::path& root) {
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory()) return entry.path();
    return fs::path();
  };
  auto d1 = find_run_dir(out1);
  auto d8 = find_run_dir(out8);
  REQUIRE_FALSE(d1.empty());
  REQUIRE_FALSE(d8.empty());
  CHECK(csv::read_file(d1 / "rates.csv") == csv::read_file(d8 / "rates.csv"));

  auto m1 = nlohmann::json::parse(csv::read_file(d1 / "manifest.json"));
  auto m8 = nlohmann::json::parse(csv::read_file(d8 / "manifest.json"));
  CHECK(m1["artifacts"] == m8["artifacts"]);
}

TEST_CASE("cli: environment variable supplies the output root") {
  auto out = fresh_dir("cli-env");
  auto r = run_cli("yw-check --seed 9", "MVSDE_OUT_DIR=" + out.string());
  REQUIRE(r.code == 0);
  bool found = false;
  for (const auto& entry : fs::directory_iterator(out))
    if (entry.is_directory() && entry.path().filename().string().rfind("yw-check-", 0) == 0)
      found = true;
  CHECK(found);
}

TEST_CASE("cli: seed override lands in the manifest and the directory name") {
  auto out = fresh_dir("cli-seed");
  auto r = run_cli("yw-check --seed 31415 --out " + out.string());
  REQUIRE(r.code == 0);
  bool found = false;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    if (entry.path().filename().string().find("seed31415") == std::string::npos) continue;
    found = true;
    auto manifest = nlohmann::json::parse(csv::read_file(entry.path() / "manifest.json"));
    CHECK(manifest["seed"]["master_seed"] == 31415);
  }
  CHECK(found);
}
