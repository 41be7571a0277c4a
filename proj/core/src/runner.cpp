#include "mvsde/runner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "mvsde/csv.hpp"
#include "mvsde/study.hpp"
#include "mvsde/version.hpp"
#include "mvsde/yamada.hpp"

namespace mvsde {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string utc_now(const char* format) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof(buf), format, &tm);
  return std::string(buf);
}

// Holds everything accumulated while an experiment runs; turned into the
// manifest at the end (or on failure, flagged partial).
struct RunState {
  RunOutcome outcome;
  ordered_json summary = ordered_json::object();
  std::string started;

  void artifact(const fs::path& dir, const std::string& name, const std::string& content) {
    csv::write_file(dir / name, content);
    outcome.artifacts.push_back(
        RunArtifact{name, hex64(fnv1a64(content.data(), content.size()))});
  }

  void check(std::string name, bool pass, std::string detail) {
    outcome.lines.push_back("check " + name + ": " + (pass ? "PASS" : "FAIL") + " (" + detail +
                            ")");
    outcome.checks.push_back(EnvelopeCheck{std::move(name), pass, std::move(detail)});
  }

  void line(std::string text) { outcome.lines.push_back(std::move(text)); }
};

fs::path fresh_run_dir(const fs::path& root, const std::string& stem) {
  fs::create_directories(root);
  fs::path dir = root / stem;
  for (int k = 2; fs::exists(dir); ++k) dir = root / (stem + "-" + std::to_string(k));
  fs::create_directory(dir);
  return dir;
}

std::string describe_fit(const RateReport& report) {
  if (!report.fit) {
    return "no fit (" + (report.note.empty() ? std::string("unavailable") : report.note) + ")";
  }
  return "slope " + csv::format_double(report.fit->slope) + ", residual rms " +
         csv::format_double(report.fit->residual_rms);
}

bool all_zero(const std::vector<ErrorSample>& samples) {
  for (const auto& s : samples)
    if (s.estimate != 0.0) return false;
  return true;
}

// Fitted-slope envelope; a missing fit passes only in the exactly-degenerate
// case (every estimate identically zero, e.g. inert coupling).
void slope_envelope(RunState& state, const std::string& name, const RateReport& report,
                    bool upper_bound, double threshold) {
  if (!report.fit) {
    const bool degenerate = all_zero(report.samples);
    state.check(name, degenerate,
                degenerate ? "all estimates exactly zero; rate is vacuously satisfied"
                           : "fit unavailable: " + report.note);
    return;
  }
  const double slope = report.fit->slope;
  const bool pass = upper_bound ? slope <= threshold : slope >= threshold;
  state.check(name, pass,
              "fitted slope " + csv::format_double(slope) + (upper_bound ? " <= " : " >= ") +
                  csv::format_double(threshold) + " required");
}

void monotone_envelope(RunState& state, const std::string& name,
                       const std::vector<ErrorSample>& samples) {
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const double slack =
        2.0 * std::sqrt(samples[k].se * samples[k].se + samples[k + 1].se * samples[k + 1].se);
    if (samples[k + 1].estimate > samples[k].estimate + slack) {
      state.check(name, false,
                  "estimate rose from " + csv::format_double(samples[k].estimate) + " to " +
                      csv::format_double(samples[k + 1].estimate) + " beyond 2 SE at param " +
                      csv::format_double(samples[k + 1].param));
      return;
    }
  }
  state.check(name, true, "estimates non-increasing within 2 SE slack");
}

ordered_json report_summary(const RateReport& report) {
  ordered_json j;
  if (report.fit) {
    j["fitted_slope"] = report.fit->slope;
    j["intercept"] = report.fit->intercept;
    j["residual_rms"] = report.fit->residual_rms;
    j["used_samples"] = report.fit->used_samples;
    if (!report.fit->note.empty()) j["fit_note"] = report.fit->note;
  } else {
    j["fit"] = nullptr;
    if (!report.note.empty()) j["fit_note"] = report.note;
  }
  j["theory_slope"] = report.theory_slope;
  j["theory_note"] = report.theory_note;
  return j;
}

void fit_into_report(RateReport& report) {
  try {
    RateReport fitted = fit_rate(report.samples);
    report.fit = std::move(fitted.fit);
  } catch (const std::invalid_argument& ex) {
    report.note = ex.what();
  }
}

// ---------------------------------------------------------------------------
// Experiment bodies.  Each writes its artifacts through `state` and fills
// state.summary; envelope checks are recorded unconditionally.

void run_simulate(const RunConfig& cfg, const RunOptions&, const fs::path& dir, RunState& state) {
  const ModelSpec model = builtin_model(cfg.model, cfg.params);
  const SeedPlan plan{cfg.master_seed};
  const SimGrid grid{cfg.T, cfg.h};
  const DriverBundle bundle(plan, plan.experiment("simulate"),
                            static_cast<std::uint32_t>(cfg.N), cfg.T);
  const SimulationResult sim =
      simulate_interacting(model, cfg.init, grid, bundle, cfg.mode, cfg.substeps);
  state.artifact(dir, "trajectory.csv", csv::trajectory_csv(sim));

  double mean = 0.0;
  for (double x : sim.positions.back()) mean += x;
  mean /= static_cast<double>(sim.positions.back().size());
  state.summary["final_time"] = sim.times.back();
  state.summary["final_mean"] = mean;
  state.summary["recorded_times"] = sim.times.size();
  state.line("simulate: " + std::to_string(cfg.N) + " particles, " +
             std::to_string(sim.times.size() - 1) + " steps, final mean " +
             csv::format_double(mean));
}

void run_chaos(const RunConfig& cfg, const RunOptions& options, const fs::path& dir,
               RunState& state) {
  const ModelSpec model = builtin_model(cfg.model, cfg.params);
  const SeedPlan plan{cfg.master_seed};
  const SimGrid grid{cfg.T, cfg.h};

  RateReport report;
  report.study = "chaos";
  for (int n : cfg.N_list) {
    report.samples.push_back(chaos_error(model, cfg.init, n, grid, cfg.R, cfg.p, plan,
                                         options.threads, cfg.pool_factor));
  }
  fit_into_report(report);
  report.theory_slope = theory_chaos_slope(model, cfg.p, &report.theory_note);

  state.artifact(dir, "rates.csv", csv::rate_csv(report.samples));
  state.summary = report_summary(report);
  state.summary["p"] = cfg.p;
  state.line("chaos: " + describe_fit(report) + "; theory slope " +
             csv::format_double(report.theory_slope));
  slope_envelope(state, "chaos-slope", report, true, -0.25);
  monotone_envelope(state, "chaos-monotone", report.samples);
}

void run_euler(const RunConfig& cfg, const RunOptions& options, const fs::path& dir,
               RunState& state) {
  const ModelSpec model = builtin_model(cfg.model, cfg.params);
  const SeedPlan plan{cfg.master_seed};

  RateReport report;
  report.study = "euler";
  report.samples = euler_error(model, cfg.init, cfg.N, cfg.T, cfg.h_list, cfg.h_ref, cfg.R, cfg.p,
                               plan, options.threads);
  fit_into_report(report);
  report.theory_slope = theory_euler_slope(model, cfg.p, &report.theory_note);

  state.artifact(dir, "rates.csv", csv::rate_csv(report.samples));
  state.summary = report_summary(report);
  state.summary["p"] = cfg.p;
  state.summary["h_ref"] = cfg.h_ref;
  state.line("euler-rate: " + describe_fit(report) + "; theory slope " +
             csv::format_double(report.theory_slope));
  slope_envelope(state, "euler-slope", report, false, cfg.p == 2.0 ? 0.4 : 0.2);
}

void run_fg(const RunConfig& cfg, const RunOptions& options, const fs::path& dir,
            RunState& state) {
  const SeedPlan plan{cfg.master_seed};
  const RateReport report = fg_rate(cfg.init, cfg.N_list, cfg.R, plan, options.threads);

  state.artifact(dir, "rates.csv", csv::rate_csv(report.samples));
  state.summary = report_summary(report);
  state.line("fg-rate: " + describe_fit(report) + "; theory slope " +
             csv::format_double(report.theory_slope));
  slope_envelope(state, "fg-slope", report, true, -0.4);
}

void run_picard(const RunConfig& cfg, const RunOptions&, const fs::path& dir, RunState& state) {
  const ModelSpec model = builtin_model(cfg.model, cfg.params);
  const SeedPlan plan{cfg.master_seed};
  const SimGrid grid{cfg.T, cfg.h};
  const DriverBundle bundle(plan, plan.experiment("picard"), static_cast<std::uint32_t>(cfg.M),
                            cfg.T);
  const PicardResult result = picard_flow(model, cfg.init, grid, bundle, cfg.k_max, cfg.tol);

  state.artifact(dir, "picard.csv", csv::picard_csv(result.distances));
  state.artifact(dir, "final_pool.csv",
                 csv::cloud_csv(result.flow.pool(result.flow.checkpoints() - 1).atoms()));
  state.summary["iterations"] = result.distances.size();
  state.summary["converged"] = result.converged;
  if (!result.distances.empty()) state.summary["last_distance"] = result.distances.back();
  state.line("picard: " + std::to_string(result.distances.size()) + " iterations, " +
             (result.converged ? "converged" : "did not converge"));
  state.check("picard-converged", result.converged,
              result.converged
                  ? "distance dropped below tol after " + std::to_string(result.distances.size()) +
                        " iterations"
                  : "still above tol at k_max = " + std::to_string(cfg.k_max));
}

void run_yw_check(const RunConfig& cfg, const RunOptions&, const fs::path& dir, RunState& state) {
  const SeedPlan plan{cfg.master_seed};
  KeyedStream stream(plan, plan.experiment("yw-check"), 0, StreamKind::initial);

  double viol_upper = 0.0, viol_lower = 0.0, viol_deriv = 0.0, viol_curv = 0.0, viol_supp = 0.0;
  for (int k = 0; k < cfg.probes; ++k) {
    const double eps = cfg.eps_min + (cfg.eps_max - cfg.eps_min) * stream.next_uniform();
    const double x = 3.0 * (stream.next_uniform() - 0.5);
    const YamadaKernel kernel = YamadaKernel::canonical(eps);

    const double value = kernel.value(x);
    viol_upper = std::max(viol_upper, value - std::abs(x));
    viol_lower = std::max(viol_lower, (std::abs(x) - eps) - value);

    const double signed_slope = (x >= 0.0 ? 1.0 : -1.0) * kernel.derivative(x);
    viol_deriv = std::max({viol_deriv, -signed_slope, signed_slope - 1.0});

    if (x != 0.0) {
      const double curv = kernel.second_derivative(x);
      const double cap = 2.0 / (std::abs(x) * kernel.log_lambda());
      viol_curv = std::max({viol_curv, -curv, curv - cap});
      const bool in_support = std::abs(x) >= kernel.inner_knot() && std::abs(x) <= kernel.eps();
      if (!in_support) viol_supp = std::max(viol_supp, std::abs(curv));
    }
  }
  const double worst = std::max({viol_upper, viol_lower, viol_deriv, viol_curv, viol_supp});

  std::string table = "bound,max_violation\n";
  table += "value_upper," + csv::format_double(viol_upper) + "\n";
  table += "value_lower," + csv::format_double(viol_lower) + "\n";
  table += "derivative_range," + csv::format_double(viol_deriv) + "\n";
  table += "curvature_range," + csv::format_double(viol_curv) + "\n";
  table += "curvature_support," + csv::format_double(viol_supp) + "\n";
  state.artifact(dir, "ywcheck.csv", table);

  state.summary["probes"] = cfg.probes;
  state.summary["max_violation"] = worst;
  const bool pass = worst <= 1e-12;
  state.line(std::string("yw-check: ") + (pass ? "PASS" : "FAIL") + " (max bound violation " +
             csv::format_double(worst) + " over " + std::to_string(cfg.probes) + " probes)");
  state.check("yw-bounds", pass, "max violation " + csv::format_double(worst) + ", cap 1e-12");
}

void run_wasserstein(const RunConfig& cfg, const RunOptions&, const fs::path& dir,
                     RunState& state) {
  const EmpiricalMeasure a(csv::read_cloud(cfg.input_a));
  const EmpiricalMeasure b(csv::read_cloud(cfg.input_b));
  const double d = wasserstein_p(a, b, cfg.p);
  state.artifact(dir, "result.csv",
                 "p,distance\n" + csv::format_double(cfg.p) + "," + csv::format_double(d) + "\n");
  state.summary["p"] = cfg.p;
  state.summary["distance"] = d;
  state.line("wasserstein: W_" + csv::format_double(cfg.p) + " = " + csv::format_double(d));
}

}  // namespace

fs::path default_out_dir() {
  if (const char* env = std::getenv("MVSDE_OUT_DIR"); env != nullptr && *env != '\0')
    return fs::path(env);
  return fs::path("runs");
}

RunOutcome run(const RunConfig& config, const RunOptions& options) {
  RunConfig cfg = config;
  if (options.seed_override) cfg.master_seed = *options.seed_override;
  if (options.out_override) cfg.out_dir = *options.out_override;

  RunState state;
  state.started = utc_now("%Y-%m-%dT%H:%M:%SZ");

  fs::path dir;
  std::string error_text;
  try {
    const fs::path root = cfg.out_dir.empty() ? default_out_dir() : fs::path(cfg.out_dir);
    dir = fresh_run_dir(root, experiment_name(cfg.experiment) + "-" + utc_now("%Y%m%dT%H%M%SZ") +
                                  "-seed" + std::to_string(cfg.master_seed));
    state.outcome.run_dir = dir;

    switch (cfg.experiment) {
      case Experiment::simulate: run_simulate(cfg, options, dir, state); break;
      case Experiment::chaos: run_chaos(cfg, options, dir, state); break;
      case Experiment::euler_rate: run_euler(cfg, options, dir, state); break;
      case Experiment::fg_rate: run_fg(cfg, options, dir, state); break;
      case Experiment::picard: run_picard(cfg, options, dir, state); break;
      case Experiment::yw_check: run_yw_check(cfg, options, dir, state); break;
      case Experiment::wasserstein: run_wasserstein(cfg, options, dir, state); break;
    }
  } catch (const ConfigError& ex) {
    error_text = ex.what();
    state.outcome.exit_code = 2;
  } catch (const std::invalid_argument& ex) {
    error_text = ex.what();
    state.outcome.exit_code = 2;
  } catch (const std::exception& ex) {
    error_text = ex.what();
    state.outcome.exit_code = 3;
  }

  if (!error_text.empty()) {
    state.line("error: " + error_text);
  } else if (options.assert_envelopes) {
    for (const auto& check : state.outcome.checks) {
      if (!check.pass) {
        state.line("assertion failed: " + check.name);
        state.outcome.exit_code = 1;
        break;
      }
    }
  }

  if (!dir.empty()) {
    ordered_json manifest;
    manifest["library_version"] = kVersion;
    manifest["experiment"] = experiment_name(cfg.experiment);
    manifest["config"] = ordered_json::parse(serialize_config(cfg));
    manifest["seed"] = {{"master_seed", cfg.master_seed}, {"keying_scheme", kKeyingScheme}};
    manifest["threads"] = options.threads;
    manifest["assert_mode"] = options.assert_envelopes;
    manifest["started_utc"] = state.started;
    manifest["finished_utc"] = utc_now("%Y-%m-%dT%H:%M:%SZ");
    manifest["summary"] = state.summary;
    ordered_json checks = ordered_json::array();
    for (const auto& c : state.outcome.checks)
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    manifest["envelope_checks"] = checks;
    ordered_json artifacts = ordered_json::array();
    for (const auto& a : state.outcome.artifacts)
      artifacts.push_back({{"file", a.filename}, {"fnv1a64", a.digest}});
    manifest["artifacts"] = artifacts;
    manifest["partial"] = !error_text.empty();
    if (!error_text.empty()) manifest["error"] = error_text;
    try {
      csv::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& ex) {
      state.line(std::string("error writing manifest: ") + ex.what());
      if (state.outcome.exit_code == 0) state.outcome.exit_code = 3;
    }
    state.line("run-dir: " + dir.string());
  }

  return state.outcome;
}

}  // namespace mvsde
