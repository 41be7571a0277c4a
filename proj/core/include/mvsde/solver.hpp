#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsde/drivers.hpp"
#include "mvsde/empirical_measure.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

// Uniform time grid over [0, T]: points k h for k = 0..steps, the last one
// clamped to T when h does not divide T.
struct SimGrid {
  double T = 1.0;
  double h = 0.01;

  int steps() const;
  double time(int k) const;
  // Projection t -> floor(t / h) h, the coefficient-freeze map of the scheme.
  double project(double t) const;
  void validate() const;
};

// Scheme argument-time discipline.  `frozen` keeps coefficient arguments at
// the last scheme grid point; `continuous` refreshes them at every
// integration step.  When the integration grid equals the scheme grid the
// two coincide, which is exactly the degenerate-coupling identity the tests
// pin down.
enum class StepMode { frozen, continuous };

// Time-indexed family of measure checkpoints, the law surrogate consumed by
// non-interacting systems.  Lookup returns the measure at the most recent
// checkpoint <= t; all checkpoints carry pools of one common size.
class LawFlow {
 public:
  LawFlow(std::vector<double> times, std::vector<EmpiricalMeasure> pools);
  static LawFlow constant(EmpiricalMeasure pool);

  std::size_t checkpoints() const { return times_.size(); }
  std::size_t pool_size() const { return pools_.front().size(); }
  const std::vector<double>& times() const { return times_; }
  const EmpiricalMeasure& pool(std::size_t k) const { return pools_[k]; }

  const EmpiricalMeasure& lookup(double t) const;

  // A constant flow covers everything; otherwise checkpoints must start at 0
  // and reach the grid's last step start.  Throws std::invalid_argument.
  void require_covers(const SimGrid& grid) const;

 private:
  std::vector<double> times_;
  std::vector<EmpiricalMeasure> pools_;
};

// State blow-up (guard at |X| > 1e12 or non-finite).
struct BlowUpError : std::runtime_error {
  BlowUpError(std::uint32_t particle_index, double at_time);
  std::uint32_t particle;
  double time;
};

// ===========================================================================
// ParticleSystem: one jump-adapted Euler system over an integration grid.
//
// Each integration step [t_k, t_k+1] advances every particle with drift,
// diffusion and compensator arguments frozen at the last refresh point;
// jumps land at their exact schedule times inside the step, in time order,
// with the same frozen arguments (jumps never see intra-step state).  The
// empirical measure is rebuilt only after the whole step, so particles
// within a step are order-independent.
//
// `freeze_every` expresses the scheme step as a multiple of the integration
// step: the canonical frozen scheme at step h sampled on a grid of step
// h/substeps uses freeze_every = substeps.  Continuous mode is
// freeze_every = 1.  Measure arguments come from the system's own cloud or,
// for non-interacting (limit / iterate) systems, from an external LawFlow.
// ===========================================================================
class ParticleSystem {
 public:
  struct Options {
    int freeze_every = 1;
    const LawFlow* law = nullptr;
    std::uint32_t first_particle = 0;
    std::uint32_t count = 0;  // 0: all bundle particles from first_particle on
  };

  // Flat buffer of (particle local index, post-jump position) pairs for one
  // integration step, in processing order.  Two systems over one bundle
  // produce pointwise-matching sequences, which is what the pathwise-sup
  // accumulators compare at jump checkpoints.
  using JumpTrace = std::vector<std::pair<std::uint32_t, double>>;

  ParticleSystem(const ModelSpec& model, const InitialLaw& init, const DriverBundle& bundle,
                 const SimGrid& integration, Options opts);
  ParticleSystem(const ModelSpec& model, const InitialLaw& init, const DriverBundle& bundle,
                 const SimGrid& integration)
      : ParticleSystem(model, init, bundle, integration, Options{}) {}

  std::uint32_t count() const { return static_cast<std::uint32_t>(positions_.size()); }
  int total_steps() const { return total_steps_; }
  int step_index() const { return step_; }
  bool done() const { return step_ >= total_steps_; }
  double time() const;

  void step(JumpTrace* trace = nullptr);
  void run();  // steps to T

  const std::vector<double>& positions() const { return positions_; }
  const EmpiricalMeasure& empirical() const { return empirical_; }
  const std::vector<double>& running_sup_abs() const { return sup_abs_; }
  const std::vector<std::vector<double>>& jump_times() const { return jump_times_; }

 private:
  void refresh_frozen(double t0);

  const ModelSpec& model_;
  const DriverBundle& bundle_;
  SimGrid grid_;
  Options opts_;

  int total_steps_ = 0;
  int step_ = 0;
  std::vector<double> positions_;
  EmpiricalMeasure empirical_;
  std::vector<double> frozen_x_;
  EmpiricalMeasure frozen_own_;               // snapshot for the interacting case
  const EmpiricalMeasure* frozen_mu_ = nullptr;  // frozen_own_ or a law pool
  std::vector<double> drift_;  // b1 + b2 - compensator at the frozen snapshot
  std::vector<double> diff_;   // sigma at the frozen snapshot
  std::vector<JumpSchedule> sched0_, sched1_;
  std::vector<std::size_t> cur0_, cur1_;
  std::vector<double> sup_abs_;
  std::vector<std::vector<double>> jump_times_;
};

// One scheme step from an explicit state (arguments frozen at state.time,
// jumps inside (time, time + h] applied at their exact times).
struct ParticleSystemState {
  double time = 0.0;
  std::vector<double> positions;
  EmpiricalMeasure measure;  // empirical measure of `positions`
};
ParticleSystemState step_interacting(const ModelSpec& model, const ParticleSystemState& state,
                                     const SimGrid& grid, const DriverBundle& bundle,
                                     StepMode mode);

// Full interacting run.  The trajectory is recorded on the integration grid
// (scheme step h split into `substeps` cells); with mode == frozen the
// coefficients refresh at scheme points only, with mode == continuous at
// every integration point.  substeps == 1 makes the two modes identical.
struct SimulationResult {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // [time][particle]
  std::vector<double> sup_abs;                 // per particle, jumps included
  std::vector<std::vector<double>> jump_times; // per particle
};
SimulationResult simulate_interacting(const ModelSpec& model, const InitialLaw& init,
                                      const SimGrid& grid, const DriverBundle& bundle,
                                      StepMode mode = StepMode::frozen, int substeps = 1,
                                      std::uint32_t first_particle = 0, std::uint32_t count = 0);

// Non-interacting system with the measure argument read from `law`; drivers
// (and hence the coupling with the interacting system) come from the shared
// bundle.  Throws if the flow does not cover the grid.
SimulationResult simulate_limit_coupled(const ModelSpec& model, const InitialLaw& init,
                                        const SimGrid& grid, const DriverBundle& bundle,
                                        const LawFlow& law, std::uint32_t first_particle = 0,
                                        std::uint32_t count = 0);

// Law checkpoints of a simulation: one empirical pool per recorded time.
LawFlow law_flow_from(const SimulationResult& sim);

// Distribution-iterated construction: iterate k solves the system with the
// measure frozen to iterate k-1's flow, all iterates driven by the same
// bundle.  mu^(0) is the constant-in-time initial pool.  Stops once the sup
// over checkpoints of W2(mu^(k), mu^(k-1)) drops below tol (an infinite tol
// stops after one iteration) or at k_max.
struct PicardResult {
  LawFlow flow;
  std::vector<double> distances;  // one per completed iteration
  bool converged = false;
};
PicardResult picard_flow(const ModelSpec& model, const InitialLaw& init, const SimGrid& grid,
                         const DriverBundle& bundle, int k_max, double tol);

}  // namespace mvsde
