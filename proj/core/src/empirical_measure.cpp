#include "mvsde/empirical_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mvsde {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples) : atoms_(std::move(samples)) {
  if (atoms_.empty()) throw std::invalid_argument("empirical measure: empty cloud");
  for (double x : atoms_) {
    if (!std::isfinite(x)) throw std::invalid_argument("empirical measure: non-finite atom");
  }
  std::stable_sort(atoms_.begin(), atoms_.end());
  double s1 = 0.0, s2 = 0.0;
  for (double x : atoms_) {
    s1 += x;
    s2 += x * x;
  }
  mean_ = s1 / static_cast<double>(atoms_.size());
  second_moment_ = s2 / static_cast<double>(atoms_.size());
}

EmpiricalMeasure EmpiricalMeasure::dirac(double atom) {
  return EmpiricalMeasure(std::vector<double>{atom});
}

double EmpiricalMeasure::moment(double p) const {
  if (p <= 0.0) throw std::invalid_argument("moment: p must be positive");
  double acc = 0.0;
  for (double x : atoms_) acc += std::pow(std::abs(x), p);
  return acc / static_cast<double>(atoms_.size());
}

namespace {

double mean_power_cost(std::span<const double> a, std::span<const double> b, double p) {
  // Equal sizes assumed; pairs a_i with b_i.
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), p);
  return acc / static_cast<double>(a.size());
}

double finish(double mean_cost, double p) {
  // Outer exponent 1/(1 v p): root only for p >= 1.
  return p >= 1.0 ? std::pow(mean_cost, 1.0 / p) : mean_cost;
}

}  // namespace

double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (p <= 0.0) throw std::invalid_argument("wasserstein_p: p must be positive");
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  if (a.size() == b.size()) return finish(mean_power_cost(a, b, p), p);
  if (mu.size() == 1 || nu.size() == 1) {
    const auto& cloud = mu.size() == 1 ? b : a;
    const double atom = mu.size() == 1 ? a[0] : b[0];
    double acc = 0.0;
    for (double x : cloud) acc += std::pow(std::abs(x - atom), p);
    return finish(acc / static_cast<double>(cloud.size()), p);
  }
  throw std::invalid_argument("wasserstein_p: cloud sizes differ and neither is a Dirac mass");
}

double wasserstein_oracle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (p < 1.0) throw std::invalid_argument("wasserstein_oracle: requires p >= 1");
  if (mu.size() != nu.size()) throw std::invalid_argument("wasserstein_oracle: sizes differ");
  if (mu.size() > 8) throw std::invalid_argument("wasserstein_oracle: n > 8 is not tractable");
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[perm[i]]), p);
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return finish(best / static_cast<double>(a.size()), p);
}

double distance_to_dirac0(const EmpiricalMeasure& mu, double p) {
  if (p <= 0.0) throw std::invalid_argument("distance_to_dirac0: p must be positive");
  return finish(mu.moment(p), p);
}

}  // namespace mvsde
