#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mvsde/rng.hpp"

namespace mvsde {

// Finite-activity jump mark measure nu on the mark space, not necessarily a
// probability: total_mass = nu(U) scales the jump intensity, marks are drawn
// from nu / total_mass.
//
// Discrete measures are the native representation; compensator sums against
// them are exact.  The one continuous family (Gaussian marks) can be sampled
// directly but integrates only through an explicitly declared quadrature
// rule, with the declared error bound carried alongside.
class MarkMeasure {
 public:
  // Default: the zero measure (no jumps at all).
  MarkMeasure() = default;

  // weights must be positive; total mass = sum of weights.
  static MarkMeasure discrete(std::vector<std::pair<double, double>> atoms_and_weights);
  static MarkMeasure gaussian(double mean, double sd, double total_mass);

  double total_mass() const { return total_mass_; }
  bool is_discrete() const { return family_ == Family::discrete; }

  // nodes/weights integrating g -> int g dnu as sum g(u_j) w_j.
  void declare_quadrature(std::vector<std::pair<double, double>> nodes_and_weights,
                          double error_bound);
  bool has_quadrature() const { return is_discrete() || !quad_.empty(); }
  double quadrature_error_bound() const;

  // Integration nodes: the atoms themselves when discrete, the declared rule
  // otherwise.  Throws std::runtime_error for a continuous measure with no
  // declared rule; exactness of compensator sums depends on this surface.
  const std::vector<std::pair<double, double>>& nodes() const;

  // One mark from the normalised measure.
  double sample(KeyedStream& stream) const;

 private:
  enum class Family { discrete, gaussian };

  Family family_ = Family::discrete;
  double total_mass_ = 0.0;
  std::vector<std::pair<double, double>> atoms_;  // discrete only
  std::vector<double> cumulative_;                // discrete sampling table
  double mean_ = 0.0, sd_ = 1.0;                  // gaussian only
  std::vector<std::pair<double, double>> quad_;
  double quad_error_ = 0.0;
};

}  // namespace mvsde
