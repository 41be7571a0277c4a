#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/empirical_measure.hpp"
#include "mvsde/mark_measure.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

// Initial condition xi.  Families are closed-form so declared moments can be
// trusted by the studies (the q > 2p safeguards check against this table).
struct InitialLaw {
  enum class Family { point, gaussian, uniform };

  static InitialLaw point(double value);
  static InitialLaw gaussian(double mean, double sd);
  static InitialLaw uniform(double lo, double hi);

  double draw(KeyedStream& stream) const;

  // E|xi|^p.  All three families have every absolute moment finite; values
  // are closed-form for the cases the studies query.
  double abs_moment(double p) const;

  std::string name() const;

  bool operator==(const InitialLaw&) const = default;

  Family family = Family::point;
  double a = 0.0;  // point value / mean / lower edge
  double b = 1.0;  // unused / sd / upper edge
};

// One-dimensional jump-diffusion whose drift couples to a measure argument:
//
//   dX = [b1(X, mu) + b2(X, mu)] dt + sigma(X) dW
//        + d(compensated jumps, f0 against nu0) + d(plain jumps, f1 against nu1)
//
// with mu the law (or empirical law) of X itself.  Regularity enters through
// the declared exponents and constants:
//   alpha in [1/2, 1]: Holder exponent of sigma        (constant K2)
//   beta  in (0, 1]  : Holder exponent of b1 in x      (constant K1)
//   b1 non-increasing in x; b2 jointly Lipschitz        (constant K1)
//   jump kernels mean-square Lipschitz in (x, mu)       (constant K3)
//   linear growth                                       (M1, M2, M3)
// validate_assumptions probes these numerically; the built-in models carry
// constants derived by hand so the probe ratios stay non-positive.
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;

  std::function<double(double, const EmpiricalMeasure&)> b1;
  std::function<double(double, const EmpiricalMeasure&)> b2;
  std::function<double(double)> sigma;
  std::function<double(double, const EmpiricalMeasure&, double)> f0;
  std::function<double(double, const EmpiricalMeasure&, double)> f1;

  MarkMeasure nu0;
  MarkMeasure nu1;

  double alpha = 1.0;
  double beta = 1.0;
  double K1 = 1.0, K2 = 1.0, K3 = 1.0;
  double M1 = 1.0, M2 = 1.0, M3 = 1.0;
};

// Built-in model families:
//   "M_OU":     b1 = -a x, b2 = c mean(mu), constant sigma = s,
//               f0 = g0 u, f1 = g1 u, symmetric +-1 marks of mass m0 / m1.
//   "M_HOLDER": as M_OU but b1 = -sgn(x) |x|^beta and
//               sigma(x) = s min(|x|, r_clip)^alpha.
//   "M_CHAOS":  M_OU preset with active interaction (c != 0).
// Unknown names and out-of-range parameters throw std::invalid_argument with
// a field-level message.
ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& params = {});

// Drift compensator of the f0 driver: int f0(x, mu, u) nu0(du), an exact sum
// for discrete marks.  Continuous marks integrate through their declared
// quadrature rule (the rule's error bound travels on the MarkMeasure);
// without a rule this throws.
double compensator_integral(const ModelSpec& model, double x, const EmpiricalMeasure& mu);

// Numerical probe of the standing assumptions.
struct ProbePlan {
  int probes = 1000;
  int cloud_size = 8;
  double x_scale = 3.0;      // probe points ~ x_scale * N(0,1), plus tail points
  double tol = 0.0;          // PASS iff every ratio <= tol
  std::uint64_t seed = 2026;
};

struct AssumptionCheck {
  std::string name;
  double worst_ratio;        // observed / bound - 1, maximised over probes
  std::string worst_probe;   // human-readable description of the arg max
};

struct ValidationReport {
  bool pass = false;
  double tol = 0.0;
  std::vector<AssumptionCheck> checks;

  const AssumptionCheck& check(const std::string& name) const;
  std::string summary() const;
};

// Evaluates every assumption ratio on randomised probes (points, pairs and
// clouds drawn from the plan's seed).  Ratios are
//     observed quantity / declared bound - 1,
// so a correct constant yields <= 0 up to roundoff; degenerate probes where
// both sides vanish are skipped.  A non-finite coefficient value aborts with
// a diagnostic naming the probe.
ValidationReport validate_assumptions(const ModelSpec& model, const ProbePlan& plan = {});

}  // namespace mvsde
