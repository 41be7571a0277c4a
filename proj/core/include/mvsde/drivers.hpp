#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvsde/mark_measure.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

// Jump times and marks of one Poisson driver over [0, T], fixed once per
// (particle, driver) and shared by every scheme that consumes the bundle;
// the schedule does not depend on any time grid.
struct JumpSchedule {
  std::vector<double> times;  // sorted, in (0, T]
  std::vector<double> marks;  // same length
};

// ===========================================================================
// DriverBundle: all randomness for one experiment replication.
//
// Brownian paths are realised lazily on a dyadic tree over [0, T]: the
// increment of node (level l, index j) spans [j, j+1] * T * 2^-l, the root is
// sqrt(T) Z, and each node splits by midpoint conditioning
//     left | parent ~ N(parent / 2, len(parent) / 4).
// Every node increment is rounded to the fixed lattice q Z with q = 2^-31.
// Rounding to a shared lattice is what buys exact refinement consistency in
// floating point: the right child is stored as parent - left (exact, both
// lattice points), so child increments sum to their parent bit-for-bit, and
// any regrouping of lattice sums up to 2^53 q stays exact.  The statistical
// cost is an O(q) perturbation per increment, invisible next to sqrt(h).
//
// Time resolution is the skeleton leaf, T * 2^-depth; query times snap to the
// nearest leaf boundary.
// ===========================================================================
class DriverBundle {
 public:
  DriverBundle(SeedPlan plan, std::uint64_t experiment_id, std::uint32_t n_particles,
               double horizon, int skeleton_depth = 20);

  // Relabelled particle streams (exchangeability checks, pool offsets).
  DriverBundle(SeedPlan plan, std::uint64_t experiment_id, std::vector<std::uint32_t> particle_keys,
               double horizon, int skeleton_depth = 20);

  std::uint32_t particles() const { return static_cast<std::uint32_t>(keys_.size()); }
  double horizon() const { return horizon_; }
  int skeleton_depth() const { return depth_; }
  const SeedPlan& plan() const { return plan_; }
  std::uint64_t experiment_id() const { return experiment_id_; }

  // Nearest skeleton leaf boundary, in [0, 2^depth].
  std::int64_t skeleton_index(double t) const;
  double skeleton_time(std::int64_t index) const;

  // Brownian increment of particle i over leaf-index interval [a, b].
  double brownian_increment_between(std::uint32_t i, std::int64_t a, std::int64_t b) const;
  // Convenience on raw times (snapped to the skeleton).
  double brownian_increment(std::uint32_t i, double t0, double t1) const;
  // Per-cell increments over a strictly increasing grid in [0, T].
  std::vector<double> brownian_increments(std::uint32_t i, std::span<const double> grid) const;

  // Jump driver `which` (0 = compensated, 1 = plain) of particle i.
  JumpSchedule jump_schedule(std::uint32_t i, int which, const MarkMeasure& nu) const;

  // Initial-condition stream of particle i.
  KeyedStream initial_stream(std::uint32_t i) const;

 private:
  double node_descend(const KeyedStream& s, std::int64_t a, std::int64_t b, int level,
                      std::int64_t index, double value) const;
  KeyedStream brownian_stream(std::uint32_t i) const;

  SeedPlan plan_;
  std::uint64_t experiment_id_ = 0;
  std::vector<std::uint32_t> keys_;
  double horizon_ = 1.0;
  int depth_ = 20;
  std::int64_t leaves_ = 1 << 20;
  std::vector<double> half_sqrt_len_;  // 0.5 * sqrt(T 2^-l) per level
};

// Shared-driver view for coupled schemes.  All schemes must request the
// bundle's horizon; a mismatch throws std::invalid_argument naming the
// offending scheme.  Schemes holding the returned pointer observe identical
// increments, schedules and initial draws because they address the same
// counters.
struct SchemeRequest {
  std::string scheme_id;
  double horizon;
};
std::shared_ptr<const DriverBundle> couple(std::shared_ptr<const DriverBundle> bundle,
                                           std::span<const SchemeRequest> requests);

}  // namespace mvsde
