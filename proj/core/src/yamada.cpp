#include "mvsde/yamada.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvsde {

YamadaKernel::YamadaKernel(FromLog, double eps, double log_lambda) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("yamada: eps must lie in (0,1)");
  if (!(log_lambda > 0.0)) throw std::invalid_argument("yamada: lambda must exceed 1");
  eps_ = eps;
  log_lambda_ = log_lambda;
  inner_ = eps_ * std::exp(-log_lambda_);
  ramp_offset_ = (eps_ - inner_) / log_lambda_;
}

YamadaKernel::YamadaKernel(double eps, double lambda)
    : YamadaKernel(FromLog{}, eps, lambda > 1.0 ? std::log(lambda) : -1.0) {}

YamadaKernel YamadaKernel::canonical(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("yamada: eps must lie in (0,1)");
  return YamadaKernel(FromLog{}, eps, 1.0 / eps);
}

double YamadaKernel::phi(double z) const {
  if (z < inner_ || z > eps_) return 0.0;
  return 1.0 / (z * log_lambda_);
}

double YamadaKernel::value(double x) const {
  const double a = std::abs(x);
  if (a <= inner_) return 0.0;
  if (a >= eps_) return a - ramp_offset_;
  // int_{inner}^{a} ln(z/inner) / log_lambda dz, written against eps to keep
  // the log argument near 1 at the outer knot.
  const double log_ratio = log_lambda_ + std::log(a / eps_);  // = ln(lambda a / eps)
  return (a * log_ratio - a + inner_) / log_lambda_;
}

double YamadaKernel::derivative(double x) const {
  if (x == 0.0) return 0.0;
  const double a = std::abs(x);
  const double ramp = (log_lambda_ + std::log(a / eps_)) / log_lambda_;
  const double clamped = std::clamp(ramp, 0.0, 1.0);
  return x > 0.0 ? clamped : -clamped;
}

double YamadaKernel::second_derivative(double x) const {
  if (x == 0.0) throw std::domain_error("yamada: V'' is undefined at x = 0");
  return phi(std::abs(x));
}

}  // namespace mvsde
