// Micro-benchmarks for the hot paths: transport distance (sort pairing),
// Brownian tree descent, one scheme step of the interacting system, and a
// small end-to-end chaos replicate.

#include <benchmark/benchmark.h>

#include <optional>
#include <random>
#include <vector>

#include "mvsde/drivers.hpp"
#include "mvsde/empirical_measure.hpp"
#include "mvsde/solver.hpp"
#include "mvsde/study.hpp"

using namespace mvsde;

namespace {

std::vector<double> gaussian_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = d(gen);
  return xs;
}

void BM_Wasserstein(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  auto a = gaussian_cloud(n, 1), b = gaussian_cloud(n, 2);
  for (auto _ : state) {
    EmpiricalMeasure mu(a), nu(b);
    benchmark::DoNotOptimize(wasserstein_p(mu, nu, 2.0));
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Wasserstein)->Range(64, 16384)->Complexity();

void BM_BrownianDescent(benchmark::State& state) {
  SeedPlan plan{5};
  DriverBundle bundle(plan, plan.experiment("bench"), 1, 1.0);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto _ : state) {
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    benchmark::DoNotOptimize(bundle.brownian_increment(0, a, b));
  }
}
BENCHMARK(BM_BrownianDescent);

void BM_SystemStep(benchmark::State& state) {
  auto n = static_cast<std::uint32_t>(state.range(0));
  auto model = builtin_model("M_CHAOS");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{6};
  DriverBundle bundle(plan, plan.experiment("bench-step"), n, 1.0);
  SimGrid grid{1.0, 0x1.0p-8};
  std::optional<ParticleSystem> sys;
  sys.emplace(model, init, bundle, grid);
  for (auto _ : state) {
    if (sys->done()) {
      state.PauseTiming();
      sys.emplace(model, init, bundle, grid);
      state.ResumeTiming();
    }
    sys->step();
    benchmark::DoNotOptimize(sys->positions().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SystemStep)->Arg(64)->Arg(512)->Arg(4096);

void BM_ChaosReplicate(benchmark::State& state) {
  auto model = builtin_model("M_CHAOS");
  auto init = InitialLaw::gaussian(0.0, 1.0);
  SeedPlan plan{7};
  SimGrid grid{1.0, 0x1.0p-6};
  for (auto _ : state) {
    auto sample = chaos_error(model, init, 16, grid, 2, 2.0, plan, 1, 8);
    benchmark::DoNotOptimize(sample.estimate);
  }
}
BENCHMARK(BM_ChaosReplicate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
