#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvsde/model.hpp"
#include "mvsde/solver.hpp"

namespace mvsde {

// One point of a convergence experiment: the Monte Carlo estimate of
// E[(1/N) sum_i sup_t |Z_t^i|^p] at one parameter value (N or h), with the
// standard error taken across replications (particles within a replication
// are dependent through the empirical measure, so they do not enter the SE).
struct ErrorSample {
  double param = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  int replications = 0;
  double p = 2.0;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  int used_samples = 0;
  std::string note;  // e.g. dropped zero estimates
};

// Samples plus the least-squares log-log fit and the declared theoretical
// envelope.  `fit` is absent when fewer than three samples have positive
// estimates (degenerate couplings produce exact zeros); `note` says why.
struct RateReport {
  std::string study;
  std::vector<ErrorSample> samples;
  std::optional<FitResult> fit;
  double theory_slope = 0.0;
  std::string theory_note;
  std::string note;
};

// Ordinary least squares of log(estimate) on log(param).  Non-positive
// estimates are excluded with a note; fewer than three usable samples or a
// degenerate abscissa throw std::invalid_argument.  The theory slope is the
// caller's to attach.
RateReport fit_rate(const std::vector<ErrorSample>& samples);

// Declared rate envelopes for the error statistic E[sup |Z|^p] as a function
// of the study parameter.  A zero slope with a note means the envelope is
// logarithmic (or not declared) and should be reported, not asserted.
double theory_chaos_slope(const ModelSpec& model, double p, std::string* note = nullptr);
double theory_euler_slope(const ModelSpec& model, double p, std::string* note = nullptr);
double theory_fg_slope(std::string* note = nullptr);

// ---------------------------------------------------------------------------
// Propagation of chaos at one cohort size N: the interacting system and the
// measure-flow-driven limit system run on the same drivers (same Brownian
// tree, same jump schedules, same initial draws), so their gap is the pure
// interaction error.  The limit system's law flow comes from an independent
// pool of pool_factor * N particles inside the same replication.  The sup is
// evaluated at every grid point and at every jump time.
// p must be 1 or 2; replications >= 2.
ErrorSample chaos_error(const ModelSpec& model, const InitialLaw& init, int n_particles,
                        const SimGrid& grid, int replications, double p, const SeedPlan& plan,
                        int threads = 1, int pool_factor = 64);

// Euler step-size sweep at fixed N: for each h the frozen scheme at step h
// and the continuous reference at step h_ref run coupled on one bundle per
// replication (the reference is re-integrated per h on the same drivers, so
// every comparison is pathwise).  Requires h_ref < min(h)/4 and every
// h = 2^k h_ref (exact grid nesting).
std::vector<ErrorSample> euler_error(const ModelSpec& model, const InitialLaw& init,
                                     int n_particles, double horizon,
                                     const std::vector<double>& h_list, double h_ref,
                                     int replications, double p, const SeedPlan& plan,
                                     int threads = 1);

// Empirical-measure accuracy in quadratic transport cost: two independent
// size-N clouds from the sampler, statistic W2(cloud_a, cloud_b)^2 / 2 (the
// independent-pair proxy for E W2(law, cloud)^2).  Requires a finite 5th
// moment of the sampler.  The fit may be absent (point mass gives exact
// zeros); the envelope slope is -1/2.
RateReport fg_rate(const InitialLaw& sampler, const std::vector<int>& sample_counts,
                   int replications, const SeedPlan& plan, int threads = 1);

}  // namespace mvsde
