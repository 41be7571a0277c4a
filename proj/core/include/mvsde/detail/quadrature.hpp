#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace mvsde::detail {

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
inline std::vector<std::pair<double, double>> gauss_legendre(std::size_t n) {
  std::vector<std::pair<double, double>> out(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 -
                           (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[i] = {-x, w};
    out[n - 1 - i] = {x, w};
  }
  return out;
}

// int_a^b f, mapped n-point rule.
template <typename F>
double integrate_gl(F&& f, double a, double b, std::size_t n = 64) {
  const auto rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (const auto& [x, w] : rule) acc += w * f(mid + half * x);
  return acc * half;
}

}  // namespace mvsde::detail
