#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/config.hpp"

namespace mvsde {

struct RunArtifact {
  std::string filename;
  std::string digest;  // fnv1a64 of the file bytes, hex
};

// One envelope assertion (declared rate or convergence flag) evaluated after
// the experiment.  Checks are always evaluated and recorded; they only affect
// the exit status in assert mode.
struct EnvelopeCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOutcome {
  // 0 success; 1 envelope check failed in assert mode; 2 bad configuration
  // surfaced at run time; 3 runtime failure (blow-up, I/O).
  int exit_code = 0;
  std::filesystem::path run_dir;
  std::vector<RunArtifact> artifacts;
  std::vector<EnvelopeCheck> checks;
  std::vector<std::string> lines;  // human-readable report, one line each
};

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  int threads = 1;
  bool assert_envelopes = false;
};

// Default output root: $MVSDE_OUT_DIR if set, else ./runs.
std::filesystem::path default_out_dir();

// Executes the experiment, writes CSV artifacts plus manifest.json into a
// fresh timestamped directory (stable inner filenames, so artifact bytes can
// be compared across runs), and reports the outcome.  Failures surface in
// exit_code/lines rather than as exceptions.
RunOutcome run(const RunConfig& config, const RunOptions& options = {});

}  // namespace mvsde
