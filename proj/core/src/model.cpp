#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mvsde/detail/quadrature.hpp"

namespace mvsde {

// ---------------------------------------------------------------------------
// InitialLaw
// ---------------------------------------------------------------------------

InitialLaw InitialLaw::point(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("initial law: non-finite point value");
  return InitialLaw{Family::point, value, 0.0};
}

InitialLaw InitialLaw::gaussian(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0)) {
    throw std::invalid_argument("initial law: gaussian needs finite mean and sd > 0");
  }
  return InitialLaw{Family::gaussian, mean, sd};
}

InitialLaw InitialLaw::uniform(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("initial law: uniform needs lo < hi");
  return InitialLaw{Family::uniform, lo, hi};
}

double InitialLaw::draw(KeyedStream& stream) const {
  switch (family) {
    case Family::point:
      return a;
    case Family::gaussian:
      return a + b * stream.next_normal();
    case Family::uniform:
      return a + (b - a) * stream.next_uniform();
  }
  return a;
}

double InitialLaw::abs_moment(double p) const {
  if (!(p > 0.0)) throw std::invalid_argument("initial law: moment order must be positive");
  switch (family) {
    case Family::point:
      return std::pow(std::abs(a), p);
    case Family::gaussian: {
      if (a == 0.0) {
        // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi), scaled by sd^p.
        return std::pow(b, p) * std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) /
               std::sqrt(std::numbers::pi);
      }
      // Shifted case: quadrature over 12 standard deviations, tail < 1e-30.
      const double lo = a - 12.0 * b, hi = a + 12.0 * b;
      const double norm = 1.0 / (b * std::sqrt(2.0 * std::numbers::pi));
      return detail::integrate_gl(
          [&](double x) {
            const double z = (x - a) / b;
            return std::pow(std::abs(x), p) * norm * std::exp(-0.5 * z * z);
          },
          lo, hi, 200);
    }
    case Family::uniform: {
      auto G = [p](double x) { return std::copysign(std::pow(std::abs(x), p + 1.0), x) / (p + 1.0); };
      return (G(b) - G(a)) / (b - a);
    }
  }
  return 0.0;
}

std::string InitialLaw::name() const {
  std::ostringstream os;
  switch (family) {
    case Family::point:
      os << "point(" << a << ")";
      break;
    case Family::gaussian:
      os << "gaussian(" << a << ", " << b << ")";
      break;
    case Family::uniform:
      os << "uniform(" << a << ", " << b << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

namespace {

struct ParamReader {
  std::map<std::string, double> values;
  std::string model;

  double take(const std::string& key, double fallback) {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    const double v = it->second;
    values.erase(it);
    return v;
  }

  void finish() const {
    if (!values.empty()) {
      throw std::invalid_argument("model " + model + ": unknown parameter '" +
                                  values.begin()->first + "'");
    }
  }
};

MarkMeasure symmetric_unit_marks(double mass) {
  if (!(mass >= 0.0)) throw std::invalid_argument("model: jump mass must be non-negative");
  if (mass == 0.0) return MarkMeasure::discrete({});
  return MarkMeasure::discrete({{1.0, 0.5 * mass}, {-1.0, 0.5 * mass}});
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

ModelSpec make_ou(const std::string& name, ParamReader& pr, double default_c) {
  const double a = pr.take("a", 1.0);
  const double c = pr.take("c", default_c);
  const double s = pr.take("s", 0.2);
  const double g0 = pr.take("g0", 0.1);
  const double g1 = pr.take("g1", 0.1);
  const double m0 = pr.take("m0", 1.0);
  const double m1 = pr.take("m1", 1.0);
  pr.finish();
  require(a >= 0.0, "model " + name + ": parameter 'a' must be >= 0 (b1 non-increasing)");
  require(s >= 0.0, "model " + name + ": parameter 's' must be >= 0");

  ModelSpec m;
  m.name = name;
  m.params = {{"a", a}, {"c", c}, {"s", s}, {"g0", g0}, {"g1", g1}, {"m0", m0}, {"m1", m1}};
  m.b1 = [a](double x, const EmpiricalMeasure&) { return -a * x; };
  m.b2 = [c](double, const EmpiricalMeasure& mu) { return c * mu.mean(); };
  m.sigma = [s](double) { return s; };
  m.f0 = [g0](double, const EmpiricalMeasure&, double u) { return g0 * u; };
  m.f1 = [g1](double, const EmpiricalMeasure&, double u) { return g1 * u; };
  m.nu0 = symmetric_unit_marks(m0);
  m.nu1 = symmetric_unit_marks(m1);
  m.alpha = 1.0;
  m.beta = 1.0;
  // Derivations: |b1| differences are a|x-y|; b2 differences are
  // |c| |mean(mu)-mean(nu)| <= |c| W1 <= |c| W2; f0/f1 ignore (x, mu).
  m.K1 = std::max({a, std::abs(c), 1e-6});
  m.K2 = std::max(std::abs(s), 1.0);
  m.K3 = 1.0;
  m.M1 = std::max({2.0 * a * a, 2.0 * c * c, s * s, 1.0});
  m.M2 = std::max(m0 * std::min(std::abs(g0), g0 * g0), 1e-9);
  m.M3 = std::max(m1 * std::abs(g1), 1e-9);
  return m;
}

ModelSpec make_holder(ParamReader& pr) {
  const std::string name = "M_HOLDER";
  const double alpha = pr.take("alpha", 0.5);
  const double beta = pr.take("beta", 0.5);
  const double c = pr.take("c", 0.0);
  const double s = pr.take("s", 1.0);
  const double g0 = pr.take("g0", 0.1);
  const double g1 = pr.take("g1", 0.1);
  const double m0 = pr.take("m0", 1.0);
  const double m1 = pr.take("m1", 1.0);
  const double r_clip = pr.take("r_clip", 1e6);
  pr.finish();
  require(alpha >= 0.5 && alpha <= 1.0, "model M_HOLDER: 'alpha' must lie in [0.5, 1]");
  require(beta > 0.0 && beta <= 1.0, "model M_HOLDER: 'beta' must lie in (0, 1]");
  require(s >= 0.0, "model M_HOLDER: parameter 's' must be >= 0");
  require(r_clip > 0.0, "model M_HOLDER: 'r_clip' must be positive");

  ModelSpec m;
  m.name = name;
  m.params = {{"alpha", alpha}, {"beta", beta}, {"c", c},   {"s", s},          {"g0", g0},
              {"g1", g1},       {"m0", m0},     {"m1", m1}, {"r_clip", r_clip}};
  m.b1 = [beta](double x, const EmpiricalMeasure&) {
    return -std::copysign(std::pow(std::abs(x), beta), x);
  };
  m.b2 = [c](double, const EmpiricalMeasure& mu) { return c * mu.mean(); };
  // The clip at r_clip keeps linear growth while preserving the Holder
  // constant: min(|x|, r) is 1-Lipschitz, so |sigma(x)-sigma(y)| <= s|x-y|^a.
  m.sigma = [s, alpha, r_clip](double x) {
    return s * std::pow(std::min(std::abs(x), r_clip), alpha);
  };
  m.f0 = [g0](double, const EmpiricalMeasure&, double u) { return g0 * u; };
  m.f1 = [g1](double, const EmpiricalMeasure&, double u) { return g1 * u; };
  m.nu0 = symmetric_unit_marks(m0);
  m.nu1 = symmetric_unit_marks(m1);
  m.alpha = alpha;
  m.beta = beta;
  // -sgn(x)|x|^beta: same-sign pairs obey ||x|^b - |y|^b| <= |x-y|^b, and
  // opposite signs give |x|^b + |y|^b <= 2 max^b <= 2 |x-y|^b.
  m.K1 = std::max({2.0, std::abs(c), 1e-6});
  m.K2 = std::max(std::abs(s), 1e-6);
  m.K3 = 1.0;
  m.M1 = std::max({2.0, 2.0 * c * c, s * s});
  m.M2 = std::max(m0 * std::min(std::abs(g0), g0 * g0), 1e-9);
  m.M3 = std::max(m1 * std::abs(g1), 1e-9);
  return m;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& params) {
  ParamReader pr{params, name};
  if (name == "M_OU") return make_ou(name, pr, 0.0);
  if (name == "M_CHAOS") return make_ou(name, pr, 0.5);
  if (name == "M_HOLDER") return make_holder(pr);
  throw std::invalid_argument("unknown model '" + name +
                              "' (expected M_OU, M_HOLDER or M_CHAOS)");
}

double compensator_integral(const ModelSpec& model, double x, const EmpiricalMeasure& mu) {
  double acc = 0.0;
  for (const auto& [u, w] : model.nu0.nodes()) acc += model.f0(x, mu, u) * w;
  return acc;
}

// ---------------------------------------------------------------------------
// Assumption probing
// ---------------------------------------------------------------------------

namespace {

struct RatioTracker {
  std::string name;
  double worst = -1.0;
  std::string probe = "no informative probes";

  void offer(double ratio, const std::string& desc) {
    if (ratio > worst) {
      worst = ratio;
      probe = desc;
    }
  }

  AssumptionCheck freeze() const { return {name, worst, probe}; }
};

std::string describe(double x, double y, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  std::ostringstream os;
  os << "x=" << x << " y=" << y << " mu(n=" << mu.size() << ", mean=" << mu.mean()
     << ") nu(n=" << nu.size() << ", mean=" << nu.mean() << ")";
  return os.str();
}

double finite_or_throw(double v, const char* what, const std::string& probe) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("validate_assumptions: non-finite ") + what + " at " +
                             probe);
  }
  return v;
}

}  // namespace

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("validation report: no check named '" + name + "'");
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " (tol=" << tol << ")\n";
  for (const auto& c : checks) {
    os << "  " << c.name << ": worst ratio " << c.worst_ratio << " at " << c.worst_probe << "\n";
  }
  return os.str();
}

ValidationReport validate_assumptions(const ModelSpec& model, const ProbePlan& plan) {
  if (plan.probes < 1) throw std::invalid_argument("validate_assumptions: probes must be >= 1");
  if (plan.cloud_size < 1) throw std::invalid_argument("validate_assumptions: empty probe clouds");

  SeedPlan sp{plan.seed};
  const std::uint64_t exp_id = sp.experiment("assumption-probes");
  KeyedStream stream(sp, exp_id, 0, StreamKind::initial);

  auto draw_point = [&](int i) {
    double x = plan.x_scale * stream.next_normal();
    if (i % 31 == 0) x *= 10.0;  // exercise the growth bounds in the tails
    if (i % 97 == 0) x = 0.0;
    return x;
  };
  auto draw_cloud = [&](int i) {
    if (i % 13 == 0) return EmpiricalMeasure::dirac(0.0);
    std::vector<double> pts(static_cast<std::size_t>(plan.cloud_size));
    const double shift = 0.5 * plan.x_scale * stream.next_normal();
    for (auto& p : pts) p = shift + plan.x_scale * stream.next_normal();
    return EmpiricalMeasure(std::move(pts));
  };

  RatioTracker h1_mu{"b1 measure Lipschitz"};
  RatioTracker h1_x{"b1 Holder in x"};
  RatioTracker h1_b2{"b2 joint Lipschitz"};
  RatioTracker h1_mono{"b1 non-increasing in x"};
  RatioTracker h2{"sigma Holder"};
  RatioTracker h3_f0_lin{"f0 mean-square Lipschitz, linear branch"};
  RatioTracker h3_f0_quad{"f0 mean-square Lipschitz, quadratic branch"};
  RatioTracker h3_f1_lin{"f1 mean-square Lipschitz, linear branch"};
  RatioTracker h3_f1_quad{"f1 mean-square Lipschitz, quadratic branch"};
  RatioTracker h4_drift{"drift linear growth"};
  RatioTracker h4_sigma{"diffusion linear growth"};
  RatioTracker h4_f0{"f0 linear growth"};
  RatioTracker h4_f1{"f1 linear growth"};
  h1_mono.worst = -std::numeric_limits<double>::infinity();

  const auto& nodes0 = model.nu0.nodes();  // throws for continuous marks without a rule
  const auto& nodes1 = model.nu1.nodes();

  for (int i = 0; i < plan.probes; ++i) {
    const double x = draw_point(i);
    const double y = draw_point(i + 1);
    const EmpiricalMeasure mu = draw_cloud(i);
    const EmpiricalMeasure nu = draw_cloud(i + 1);
    const std::string desc = describe(x, y, mu, nu);

    const double w2 = wasserstein_p(mu, nu, 2.0);
    const double dxy = std::abs(x - y);

    const double b1_x_mu = finite_or_throw(model.b1(x, mu), "b1", desc);
    const double b1_x_nu = finite_or_throw(model.b1(x, nu), "b1", desc);
    const double b1_y_mu = finite_or_throw(model.b1(y, mu), "b1", desc);
    const double b2_x_mu = finite_or_throw(model.b2(x, mu), "b2", desc);
    const double b2_y_nu = finite_or_throw(model.b2(y, nu), "b2", desc);
    const double sig_x = finite_or_throw(model.sigma(x), "sigma", desc);
    const double sig_y = finite_or_throw(model.sigma(y), "sigma", desc);

    if (w2 > 0.0) h1_mu.offer(std::abs(b1_x_mu - b1_x_nu) / (model.K1 * w2) - 1.0, desc);
    if (dxy > 0.0) {
      h1_x.offer(std::abs(b1_x_mu - b1_y_mu) / (model.K1 * std::pow(dxy, model.beta)) - 1.0, desc);
      h2.offer(std::abs(sig_x - sig_y) / (model.K2 * std::pow(dxy, model.alpha)) - 1.0, desc);
      // Non-increasing in x: b1 at the larger point must not exceed b1 at
      // the smaller.  Raw gap, not a ratio.
      const double b1_at_min = x < y ? b1_x_mu : b1_y_mu;
      const double b1_at_max = x < y ? b1_y_mu : b1_x_mu;
      h1_mono.offer(b1_at_max - b1_at_min, desc);
    }
    if (dxy + w2 > 0.0) {
      h1_b2.offer(std::abs(b2_x_mu - b2_y_nu) / (model.K1 * (dxy + w2)) - 1.0, desc);
      const double denom3 = model.K3 * (dxy * dxy + w2 * w2);
      double lin0 = 0.0, quad0 = 0.0, lin1 = 0.0, quad1 = 0.0;
      for (const auto& [u, w] : nodes0) {
        const double d = finite_or_throw(model.f0(x, mu, u), "f0", desc) -
                         finite_or_throw(model.f0(y, nu, u), "f0", desc);
        lin0 += dxy * std::abs(d) * w;
        quad0 += d * d * w;
      }
      for (const auto& [u, w] : nodes1) {
        const double d = finite_or_throw(model.f1(x, mu, u), "f1", desc) -
                         finite_or_throw(model.f1(y, nu, u), "f1", desc);
        lin1 += dxy * std::abs(d) * w;
        quad1 += d * d * w;
      }
      h3_f0_lin.offer(lin0 / denom3 - 1.0, desc);
      h3_f0_quad.offer(quad0 / denom3 - 1.0, desc);
      h3_f1_lin.offer(lin1 / denom3 - 1.0, desc);
      h3_f1_quad.offer(quad1 / denom3 - 1.0, desc);
    }

    const double w2_dirac = distance_to_dirac0(mu, 2.0);
    const double grow2 = model.M1 * (1.0 + x * x + w2_dirac * w2_dirac);
    const double drift = b1_x_mu + b2_x_mu;
    h4_drift.offer(drift * drift / grow2 - 1.0, desc);
    h4_sigma.offer(sig_x * sig_x / grow2 - 1.0, desc);

    const double grow1 = 1.0 + std::abs(x) + w2_dirac;
    double f0_growth = 0.0, f1_growth = 0.0;
    for (const auto& [u, w] : nodes0) {
      const double v = std::abs(model.f0(x, mu, u));
      f0_growth += std::min(v, v * v) * w;
    }
    for (const auto& [u, w] : nodes1) f1_growth += std::abs(model.f1(x, mu, u)) * w;
    h4_f0.offer(f0_growth / (model.M2 * grow1) - 1.0, desc);
    h4_f1.offer(f1_growth / (model.M3 * grow1) - 1.0, desc);
  }

  ValidationReport report;
  report.tol = plan.tol;
  report.checks = {h1_mu.freeze(),      h1_x.freeze(),      h1_b2.freeze(),   h1_mono.freeze(),
                   h2.freeze(),         h3_f0_lin.freeze(), h3_f0_quad.freeze(),
                   h3_f1_lin.freeze(),  h3_f1_quad.freeze(),
                   h4_drift.freeze(),   h4_sigma.freeze(),  h4_f0.freeze(),   h4_f1.freeze()};
  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [&](const AssumptionCheck& c) { return c.worst_ratio <= plan.tol; });
  return report;
}

}  // namespace mvsde
