#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mvsde/study.hpp"

using namespace mvsde;

namespace {

std::vector<ErrorSample> synthetic(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<ErrorSample> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], ys[i], 0.0, 4, 2.0});
  return out;
}

}  // namespace

TEST_CASE("fit recovers exact power laws") {
  auto report = fit_rate(synthetic({1.0, 2.0, 4.0}, {1.0, 2.0, 4.0}));
  REQUIRE(report.fit.has_value());
  CHECK(report.fit->slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.fit->residual_rms == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(report.fit->used_samples == 3);

  report = fit_rate(synthetic({1.0, 4.0, 16.0, 64.0}, {3.0, 3.0, 3.0, 3.0}));
  CHECK(report.fit->slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.fit->intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("fit tolerates mild noise around a square-root law") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  std::vector<double> xs{1.0, 2.0, 4.0, 8.0, 16.0, 32.0}, ys;
  for (double x : xs) ys.push_back(2.0 * std::sqrt(x) * (1.0 + noise(gen)));
  auto report = fit_rate(synthetic(xs, ys));
  CHECK(report.fit->slope > 0.45);
  CHECK(report.fit->slope < 0.55);
}

TEST_CASE("zero estimates are excluded with a note") {
  auto report = fit_rate(synthetic({1.0, 2.0, 4.0, 8.0}, {1.0, 0.0, 4.0, 8.0}));
  REQUIRE(report.fit.has_value());
  CHECK(report.fit->used_samples == 3);
  CHECK(report.fit->note.find("non-positive") != std::string::npos);
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(fit_rate(synthetic({1.0, 2.0}, {1.0, 2.0})), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate(synthetic({1.0, 2.0, 4.0}, {0.0, 0.0, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate(synthetic({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0})), std::invalid_argument);
}

TEST_CASE("declared envelopes") {
  auto chaos2 = builtin_model("M_CHAOS");
  std::string note;
  CHECK(theory_chaos_slope(chaos2, 2.0, &note) == -0.5);
  CHECK(theory_euler_slope(chaos2, 2.0, &note) == 0.5);  // alpha = 1, beta = 1
  CHECK(theory_fg_slope(&note) == -0.5);

  auto holder = builtin_model("M_HOLDER", {{"alpha", 0.5}});
  CHECK(theory_chaos_slope(holder, 1.0, &note) == -0.25);
  // Logarithmic envelope at the rough end: reported as no power rate.
  CHECK(theory_euler_slope(holder, 2.0, &note) == 0.0);
  CHECK(note.find("logarithmic") != std::string::npos);

  auto mid = builtin_model("M_HOLDER", {{"alpha", 0.75}, {"beta", 0.5}});
  CHECK(theory_chaos_slope(mid, 1.0, &note) == doctest::Approx(-0.125));
  CHECK(theory_euler_slope(mid, 2.0, &note) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(theory_euler_slope(mid, 1.0, &note) ==
        doctest::Approx(std::min(0.125, 0.125)).epsilon(1e-12));
}

TEST_CASE("chaos preconditions") {
  auto model = builtin_model("M_CHAOS");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{41};
  SimGrid grid{1.0, 0.25};
  CHECK_THROWS_AS(chaos_error(model, init, 8, grid, 1, 2.0, plan), std::invalid_argument);
  CHECK_THROWS_AS(chaos_error(model, init, 8, grid, 4, 3.0, plan), std::invalid_argument);
  CHECK_THROWS_AS(chaos_error(model, init, 0, grid, 4, 2.0, plan), std::invalid_argument);
}

TEST_CASE("chaos error vanishes exactly without interaction") {
  auto model = builtin_model("M_OU");  // c = 0
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{42};
  auto sample = chaos_error(model, init, 16, SimGrid{1.0, 0x1.0p-5}, 4, 2.0, plan, 2, 8);
  CHECK(sample.estimate == 0.0);
  CHECK(sample.se == 0.0);
  CHECK(sample.replications == 4);
}

TEST_CASE("chaos error decays from 8 to 512 particles") {
  auto model = builtin_model("M_CHAOS");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{43};
  SimGrid grid{1.0, 0x1.0p-6};
  auto small = chaos_error(model, init, 8, grid, 4, 2.0, plan, 4);
  auto large = chaos_error(model, init, 512, grid, 4, 2.0, plan, 4);
  CHECK(small.estimate > 0.0);
  CHECK(large.estimate > 0.0);
  CHECK(large.estimate < small.estimate);
}

TEST_CASE("euler preconditions reject non-nested grids") {
  auto model = builtin_model("M_OU");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{44};
  // h not a power-of-two multiple of h_ref.
  CHECK_THROWS_AS(euler_error(model, init, 4, 1.0, {0.1875}, 0x1.0p-8, 4, 2.0, plan),
                  std::invalid_argument);
  // h_ref too close to min(h).
  CHECK_THROWS_AS(euler_error(model, init, 4, 1.0, {0x1.0p-4}, 0x1.0p-5, 4, 2.0, plan),
                  std::invalid_argument);
  // Step beyond the horizon.
  CHECK_THROWS_AS(euler_error(model, init, 4, 1.0, {2.0}, 0x1.0p-8, 4, 2.0, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(euler_error(model, init, 4, 1.0, {}, 0x1.0p-8, 4, 2.0, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(euler_error(model, init, 4, 1.0, {0x1.0p-2}, 0x1.0p-8, 1, 2.0, plan),
                  std::invalid_argument);
}

TEST_CASE("euler error shrinks when the step halves") {
  auto model = builtin_model("M_OU");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{45};
  auto samples = euler_error(model, init, 32, 1.0, {0x1.0p-3, 0x1.0p-4}, 0x1.0p-8, 4, 2.0, plan, 4);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].param == 0x1.0p-3);
  CHECK(samples[0].estimate > samples[1].estimate);
  CHECK(samples[1].estimate > 0.0);
}

TEST_CASE("deterministic euler error has unit order") {
  std::map<std::string, double> off{{"a", 1.0}, {"c", 0.0},  {"s", 0.0}, {"g0", 0.0},
                                    {"g1", 0.0}, {"m0", 0.0}, {"m1", 0.0}};
  auto model = builtin_model("M_OU", off);
  auto init = InitialLaw::point(1.0);
  SeedPlan plan{46};
  auto samples =
      euler_error(model, init, 1, 1.0, {0x1.0p-3, 0x1.0p-4, 0x1.0p-5, 0x1.0p-6}, 0x1.0p-10, 2,
                  1.0, plan);
  auto report = fit_rate(samples);
  REQUIRE(report.fit.has_value());
  CHECK(report.fit->slope > 0.85);
  CHECK(report.fit->slope < 1.15);
}

TEST_CASE("transport rate study on a point mass is exactly zero") {
  SeedPlan plan{47};
  auto report = fg_rate(InitialLaw::point(1.0), {8, 16, 32}, 4, plan);
  REQUIRE(report.samples.size() == 3);
  for (const auto& s : report.samples) CHECK(s.estimate == 0.0);
  CHECK_FALSE(report.fit.has_value());
  CHECK(report.note.find("fit unavailable") != std::string::npos);
}

TEST_CASE("transport rate study preconditions") {
  SeedPlan plan{48};
  CHECK_THROWS_AS(fg_rate(InitialLaw::gaussian(0.0, 1.0), {8, 16}, 4, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(fg_rate(InitialLaw::gaussian(0.0, 1.0), {8, 16, 32}, 1, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(fg_rate(InitialLaw::gaussian(0.0, 1.0), {0, 16, 32}, 4, plan),
                  std::invalid_argument);
}

TEST_CASE("gaussian transport rate beats the declared envelope") {
  SeedPlan plan{49};
  auto report = fg_rate(InitialLaw::gaussian(0.0, 1.0), {16, 64, 256, 1024}, 16, plan, 4);
  REQUIRE(report.fit.has_value());
  CHECK(report.theory_slope == -0.5);
  CHECK(report.fit->slope <= -0.4);
}

TEST_CASE("studies are deterministic across thread counts") {
  auto model = builtin_model("M_CHAOS");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{50};
  SimGrid grid{1.0, 0x1.0p-5};
  auto one = chaos_error(model, init, 8, grid, 6, 2.0, plan, 1, 8);
  auto eight = chaos_error(model, init, 8, grid, 6, 2.0, plan, 8, 8);
  CHECK(one.estimate == eight.estimate);  // bitwise
  CHECK(one.se == eight.se);
}
