#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvsde {

// Equal-weight atomic measure on the real line, atoms kept sorted.
// This is the only measure representation the solver and the studies use;
// general weights never show up there, so they are deliberately out of scope.
class EmpiricalMeasure {
 public:
  // Sorts a copy of the samples. Throws std::invalid_argument on an empty
  // cloud or any non-finite atom.
  explicit EmpiricalMeasure(std::vector<double> samples);

  static EmpiricalMeasure dirac(double atom);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<double>& atoms() const { return atoms_; }

  // First and second raw moments, computed once at construction; coefficient
  // callbacks hit these in the hot loop, so they must stay O(1).
  double mean() const { return mean_; }
  double second_moment() const { return second_moment_; }

  // (1/n) sum |x_i|^p.
  double moment(double p) const;

  bool operator==(const EmpiricalMeasure&) const = default;

 private:
  std::vector<double> atoms_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
};

// p-Wasserstein distance between equal-size clouds via sorted pairing,
// which is optimal on the line for convex cost (p >= 1).  For p in (0,1)
// the value returned is (1/n) sum |x_(i) - y_(i)|^p, i.e. the outer
// exponent is 1/(1 v p) = 1; the sorted pairing is the defining convention
// here, not a claimed optimum.  One side may be a single atom (a Dirac mass)
// regardless of the other side's size.  Throws std::invalid_argument on
// p <= 0 or on a size mismatch that is not the Dirac special case.
double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// Brute-force reference: minimises the transport cost over all pairings of
// the two clouds.  Requires p >= 1 and size <= 8; used to pin wasserstein_p.
double wasserstein_oracle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// W_p(mu, delta_0) = ((1/n) sum |x_i|^p)^{1/(1 v p)}.
double distance_to_dirac0(const EmpiricalMeasure& mu, double p);

}  // namespace mvsde
