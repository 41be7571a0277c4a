#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsde/model.hpp"
#include "mvsde/solver.hpp"

namespace mvsde {

enum class Experiment { simulate, chaos, euler_rate, fg_rate, picard, yw_check, wasserstein };

// Canonical names ("euler-rate", "fg-rate", "yw-check", ...).
std::string experiment_name(Experiment e);
Experiment experiment_from(const std::string& name);  // throws ConfigError on unknown

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experiment's full parameterisation.  Fields irrelevant to the chosen
// experiment stay at their defaults; parse/serialize work with exactly the
// keys the experiment accepts, so unknown keys are hard errors and
// parse(serialize(c)) reproduces c bit for bit.
struct RunConfig {
  Experiment experiment = Experiment::simulate;

  std::string model = "M_OU";
  std::map<std::string, double> params;
  InitialLaw init = InitialLaw::gaussian(0.0, 1.0);

  double T = 1.0;
  double h = 1.0 / 256;
  std::vector<double> h_list;  // euler-rate
  double h_ref = 0.0;          // euler-rate
  int N = 64;
  std::vector<int> N_list;     // chaos, fg-rate
  int M = 512;                 // picard pool size
  int pool_factor = 64;        // chaos law pool = pool_factor * N
  int R = 16;
  double p = 2.0;
  double tol = 1e-3;           // picard
  int k_max = 10;              // picard
  int substeps = 1;            // simulate
  StepMode mode = StepMode::frozen;  // simulate

  // yw-check
  int probes = 100000;
  double eps_min = 0.01;
  double eps_max = 0.5;

  // wasserstein
  std::string input_a;
  std::string input_b;

  std::uint64_t master_seed = 1;
  std::string out_dir;  // empty: resolved from the environment at run time

  bool operator==(const RunConfig&) const = default;
};

// Ready-to-run defaults per experiment (the documented default study grids).
RunConfig default_config(Experiment e);

// JSON document -> validated config.  Rejects: malformed documents (with the
// byte offset), duplicate keys (with the JSON path), unknown experiments,
// keys the experiment does not accept, and out-of-range values, each with a
// field-level message.  Fields absent from the document take defaults
// (T = 1, R = 16, p = 2, chaos pool = 64 N).
RunConfig parse_config(const std::string& text);

// Emits exactly the keys `parse_config` accepts for config.experiment.
std::string serialize_config(const RunConfig& config);

}  // namespace mvsde
