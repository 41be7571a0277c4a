#pragma once

namespace mvsde {

// Two-parameter smoothing of |x| used to control Holder diffusion terms.
//
// For eps in (0,1) and lambda > 1, phi is the density
//     phi(z) = 1 / (z * ln(lambda))   on [eps/lambda, eps],  0 elsewhere,
// which integrates to one, and
//     V(x) = int_0^{|x|} int_0^y phi(z) dz dy.
// V is C^2, even, and satisfies
//     |x| - eps <= V(x) <= |x|,
//     sgn(x) V'(x) in [0, 1],
//     0 <= V''(x) = phi(|x|) <= 2 / (|x| ln(lambda)) on the support.
//
// Internally everything is driven by ln(lambda); the canonical coupling
// lambda = e^{1/eps} therefore works far below the overflow range of
// exp(1/eps) itself.
class YamadaKernel {
 public:
  // Throws std::invalid_argument unless eps in (0,1) and lambda > 1.
  YamadaKernel(double eps, double lambda);

  // Canonical coupling lambda = e^{1/eps}.
  static YamadaKernel canonical(double eps);

  double eps() const { return eps_; }
  double log_lambda() const { return log_lambda_; }

  // Support edges of phi: [inner_knot, eps].
  double inner_knot() const { return inner_; }

  double phi(double z) const;
  double value(double x) const;         // V
  double derivative(double x) const;    // V'
  // V''(x) = phi(|x|); the second derivative has no single value at x = 0
  // (the bound 2/(|x| ln lambda) is not even defined there), so x = 0 is
  // rejected with std::domain_error.  At the two knots the one-sided value
  // from inside the support is returned.
  double second_derivative(double x) const;

 private:
  struct FromLog {};
  YamadaKernel(FromLog, double eps, double log_lambda);

  double eps_;
  double log_lambda_;
  double inner_;       // eps * exp(-log_lambda) = eps / lambda
  double ramp_offset_; // (eps - inner) / log_lambda, the defect of V below |x|
};

}  // namespace mvsde
