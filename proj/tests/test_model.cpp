#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mvsde/model.hpp"

using namespace mvsde;

namespace {

EmpiricalMeasure probe_cloud() { return EmpiricalMeasure({-1.0, 0.5, 2.0}); }

}  // namespace

TEST_CASE("initial law families and moments") {
  auto pt = InitialLaw::point(-3.0);
  CHECK(pt.abs_moment(1.0) == 3.0);
  CHECK(pt.abs_moment(2.0) == 9.0);

  auto g = InitialLaw::gaussian(0.0, 2.0);
  CHECK(g.abs_moment(2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(g.abs_moment(4.0) == doctest::Approx(3.0 * 16.0).epsilon(1e-12));

  auto u = InitialLaw::uniform(0.0, 1.0);
  CHECK(u.abs_moment(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(u.abs_moment(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(InitialLaw::gaussian(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(InitialLaw::uniform(1.0, 0.0), std::invalid_argument);

  // Sampler agrees with the declared moments.
  SeedPlan plan{31};
  KeyedStream s(plan, plan.experiment("model-init"), 0, StreamKind::initial);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = g.draw(s);
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::abs(sum / n) < 3.0 * 2.0 / std::sqrt(double(n)));
  CHECK(std::abs(sumsq / n - 4.0) < 3.0 * 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("compensator integral is the exact mark sum") {
  // f0(x, mu, u) = x u against marks {(+1, .3), (+2, .2)} at x = 2: 2(.3 + .4) = 1.4.
  ModelSpec m = builtin_model("M_OU", {{"g0", 1.0}});
  m.f0 = [](double x, const EmpiricalMeasure&, double u) { return x * u; };
  m.nu0 = MarkMeasure::discrete({{+1.0, 0.3}, {+2.0, 0.2}});
  CHECK(compensator_integral(m, 2.0, probe_cloud()) == doctest::Approx(1.4).epsilon(1e-15));

  // Symmetric marks with a linear kernel compensate to zero.
  ModelSpec sym = builtin_model("M_OU", {{"g0", 0.7}, {"m0", 1.0}});
  CHECK(compensator_integral(sym, 5.0, probe_cloud()) == doctest::Approx(0.0));

  // Zero kernel integrates to zero regardless of marks.
  ModelSpec zero = builtin_model("M_OU", {{"g0", 0.0}});
  CHECK(compensator_integral(zero, 1.0, probe_cloud()) == 0.0);
}

TEST_CASE("compensator integral is linear in the kernel") {
  ModelSpec m = builtin_model("M_OU");
  m.nu0 = MarkMeasure::discrete({{+1.0, 0.4}, {-2.0, 0.6}});
  auto g = [](double x, const EmpiricalMeasure&, double u) { return x + u; };
  auto h = [](double x, const EmpiricalMeasure&, double u) { return x * u * u; };
  const double a = 2.5;
  EmpiricalMeasure mu = probe_cloud();

  m.f0 = g;
  double vg = compensator_integral(m, 1.3, mu);
  m.f0 = h;
  double vh = compensator_integral(m, 1.3, mu);
  m.f0 = [&](double x, const EmpiricalMeasure& mm, double u) { return a * g(x, mm, u) + h(x, mm, u); };
  double vcomb = compensator_integral(m, 1.3, mu);
  CHECK(vcomb == doctest::Approx(a * vg + vh).epsilon(1e-14));
}

TEST_CASE("continuous marks need a declared quadrature rule") {
  ModelSpec m = builtin_model("M_OU", {{"g0", 1.0}});
  m.nu0 = MarkMeasure::gaussian(0.0, 1.0, 2.0);
  CHECK_THROWS_AS(compensator_integral(m, 1.0, probe_cloud()), std::runtime_error);
  m.nu0.declare_quadrature({{0.0, 2.0}}, 1e-3);  // one-node rule integrating u -> 0
  CHECK(compensator_integral(m, 1.0, probe_cloud()) == doctest::Approx(0.0));
}

TEST_CASE("builtin models pass their own assumption constants") {
  ProbePlan plan;
  plan.probes = 10000;
  for (const char* name : {"M_OU", "M_CHAOS", "M_HOLDER"}) {
    auto model = builtin_model(name);
    auto report = validate_assumptions(model, plan);
    INFO(name, ": ", report.summary());
    REQUIRE(report.pass);
    for (const auto& c : report.checks) REQUIRE(c.worst_ratio <= plan.tol);
  }
}

TEST_CASE("square-root diffusion with unit constant is tight but valid") {
  // | |x|^{1/2} - |y|^{1/2} | <= |x - y|^{1/2} holds with equality at y = 0.
  auto model = builtin_model("M_HOLDER", {{"alpha", 0.5}, {"beta", 0.5}, {"s", 1.0}});
  CHECK(model.alpha == 0.5);
  CHECK(model.beta == 0.5);
  ProbePlan plan;
  plan.probes = 10000;
  auto report = validate_assumptions(model, plan);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("an increasing drift fails the monotonicity check") {
  ModelSpec m = builtin_model("M_OU");
  m.b1 = [](double x, const EmpiricalMeasure&) { return +x; };
  auto report = validate_assumptions(m);
  CHECK_FALSE(report.pass);
  CHECK(report.check("b1 non-increasing in x").worst_ratio > 0.0);
}

TEST_CASE("an understated constant fails its ratio check") {
  ModelSpec m = builtin_model("M_OU", {{"a", 2.0}});
  m.K1 = 0.5;  // true Lipschitz constant of b1 is 2
  auto report = validate_assumptions(m);
  CHECK_FALSE(report.pass);
}

TEST_CASE("parameter and name errors") {
  CHECK_THROWS_AS(builtin_model("M_WRONG"), std::invalid_argument);
  CHECK_THROWS_AS(builtin_model("M_HOLDER", {{"alpha", 0.3}}), std::invalid_argument);
  CHECK_THROWS_AS(builtin_model("M_HOLDER", {{"beta", 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(builtin_model("M_OU", {{"unknown_param", 1.0}}), std::invalid_argument);
  CHECK(builtin_model("M_HOLDER", {{"alpha", 0.5}}).alpha == 0.5);
}

TEST_CASE("validation surfaces non-finite coefficients and bad plans") {
  ModelSpec m = builtin_model("M_OU");
  m.sigma = [](double) { return std::nan(""); };
  CHECK_THROWS_AS(validate_assumptions(m), std::runtime_error);

  ProbePlan bad;
  bad.probes = 0;
  CHECK_THROWS_AS(validate_assumptions(builtin_model("M_OU"), bad), std::invalid_argument);
}

TEST_CASE("report lookup") {
  auto report = validate_assumptions(builtin_model("M_OU"));
  CHECK_NOTHROW(report.check("b1 non-increasing in x"));
  CHECK_THROWS_AS(report.check("no such check"), std::out_of_range);
  CHECK(report.summary().find("PASS") != std::string::npos);
}
