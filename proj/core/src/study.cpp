#include "mvsde/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mvsde {

namespace {

// Runs task(0..count-1) on up to `threads` workers.  Tasks own disjoint
// output slots, so results do not depend on the schedule; the first thrown
// exception is rethrown after all workers drain.
void run_tasks(int count, int threads, const std::function<void(int)>& task) {
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= count) return;
      try {
        task(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Per-particle sup of |A - B| over every shared integration point and every
// jump event.  The two systems must ride the same bundle and grid; their jump
// traces then align index by index.
std::vector<double> lockstep_sup_diff(ParticleSystem& a, ParticleSystem& b) {
  if (a.count() != b.count() || a.total_steps() != b.total_steps())
    throw std::logic_error("lockstep: systems disagree on size or grid");
  const std::uint32_t n = a.count();
  std::vector<double> sup(n);
  for (std::uint32_t i = 0; i < n; ++i) sup[i] = std::abs(a.positions()[i] - b.positions()[i]);
  ParticleSystem::JumpTrace ta, tb;
  while (!a.done()) {
    ta.clear();
    tb.clear();
    a.step(&ta);
    b.step(&tb);
    if (ta.size() != tb.size())
      throw std::logic_error("lockstep: coupled systems diverged in jump structure");
    for (std::size_t j = 0; j < ta.size(); ++j) {
      const double d = std::abs(ta[j].second - tb[j].second);
      if (d > sup[ta[j].first]) sup[ta[j].first] = d;
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      const double d = std::abs(a.positions()[i] - b.positions()[i]);
      if (d > sup[i]) sup[i] = d;
    }
  }
  return sup;
}

double mean_sup_power(const std::vector<double>& sup, double p) {
  double acc = 0.0;
  for (double d : sup) acc += p == 2.0 ? d * d : (p == 1.0 ? d : std::pow(d, p));
  return acc / static_cast<double>(sup.size());
}

ErrorSample aggregate(double param, const std::vector<double>& reps, double p) {
  const auto r = static_cast<int>(reps.size());
  double mean = 0.0;
  for (double e : reps) mean += e;
  mean /= r;
  double var = 0.0;
  for (double e : reps) var += (e - mean) * (e - mean);
  var /= (r - 1);
  return ErrorSample{param, mean, std::sqrt(var / r), r, p};
}

void require_moment_order(double p, const char* where) {
  if (p != 1.0 && p != 2.0)
    throw std::invalid_argument(std::string(where) + ": moment order p must be 1 or 2");
}

void require_replications(int r, const char* where) {
  if (r < 2)
    throw std::invalid_argument(std::string(where) +
                                ": need at least 2 replications for a standard error");
}

}  // namespace

// ---------------------------------------------------------------------------
// Rate fitting

RateReport fit_rate(const std::vector<ErrorSample>& samples) {
  std::vector<double> xs, ys;
  int dropped = 0;
  for (const auto& s : samples) {
    if (s.param > 0.0 && s.estimate > 0.0 && std::isfinite(s.estimate)) {
      xs.push_back(std::log(s.param));
      ys.push_back(std::log(s.estimate));
    } else {
      ++dropped;
    }
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 samples with positive estimates");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_rate: all samples share one parameter value");

  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double res = ys[k] - fit.slope * xs[k] - fit.intercept;
    rss += res * res;
  }
  fit.residual_rms = std::sqrt(rss / n);
  fit.used_samples = static_cast<int>(xs.size());
  if (dropped > 0) fit.note = "dropped " + std::to_string(dropped) + " non-positive samples";

  RateReport report;
  report.study = "fit";
  report.samples = samples;
  report.fit = std::move(fit);
  return report;
}

// ---------------------------------------------------------------------------
// Declared envelopes.  Slopes describe E[sup |Z|^p] against the study
// parameter (N for chaos and transport accuracy, h for the Euler sweep); a
// zero slope flags a logarithmic or undeclared envelope.

double theory_chaos_slope(const ModelSpec& model, double p, std::string* note) {
  const double a = model.alpha;
  if (p == 1.0) {
    if (a <= 0.5) {
      if (note) *note = "envelope N^{-1/4} (diffusion exponent 1/2)";
      return -0.25;
    }
    if (note) *note = "envelope N^{-(2 alpha - 1)/4}";
    return -(2.0 * a - 1.0) / 4.0;
  }
  if (p == 2.0) {
    if (a <= 0.5) {
      if (note) *note = "envelope N^{-1/2} (diffusion exponent 1/2)";
      return -0.5;
    }
    if (note)
      *note = "envelope N^{-1/2}, declared for diffusion exponent 1/2; "
              "smoother models decay at least this fast";
    return -0.5;
  }
  if (note) *note = "no declared envelope for this moment order";
  return 0.0;
}

double theory_euler_slope(const ModelSpec& model, double p, std::string* note) {
  const double a = model.alpha;
  const double b = model.beta;
  if (p == 1.0) {
    if (a <= 0.5) {
      if (note) *note = "logarithmic envelope (ln 1/h)^{-1/2}; no power rate to fit";
      return 0.0;
    }
    const double s = std::min((2.0 * a - 1.0) * (2.0 * a - 1.0) / 2.0, b * (2.0 * a - 1.0) / 2.0);
    if (note)
      *note = "envelope h^{(2 alpha - 1)^2 / 2} + h^{beta (2 alpha - 1) / 2}";
    return s;
  }
  if (p == 2.0) {
    if (a <= 0.5) {
      if (note) *note = "logarithmic envelope (ln 1/h)^{-1}; no power rate to fit";
      return 0.0;
    }
    const double s = std::min((2.0 * a - 1.0) / 2.0, b / 2.0);
    if (note) *note = "envelope h^{(2 alpha - 1)/2} + h^{beta/2}";
    return s;
  }
  if (note) *note = "no declared envelope for this moment order";
  return 0.0;
}

double theory_fg_slope(std::string* note) {
  if (note) *note = "envelope N^{-1/2} for the squared quadratic transport cost in dimension 1";
  return -0.5;
}

// ---------------------------------------------------------------------------
// Propagation of chaos

ErrorSample chaos_error(const ModelSpec& model, const InitialLaw& init, int n_particles,
                        const SimGrid& grid, int replications, double p, const SeedPlan& plan,
                        int threads, int pool_factor) {
  grid.validate();
  require_moment_order(p, "chaos_error");
  require_replications(replications, "chaos_error");
  if (n_particles < 1) throw std::invalid_argument("chaos_error: need at least one particle");
  if (pool_factor < 1) throw std::invalid_argument("chaos_error: pool factor must be >= 1");

  const auto n = static_cast<std::uint32_t>(n_particles);
  const auto m = static_cast<std::uint32_t>(pool_factor) * n;
  const std::uint64_t base = SeedPlan::child(plan.experiment("chaos"), n);

  std::vector<double> reps(static_cast<std::size_t>(replications));
  run_tasks(replications, threads, [&](int r) {
    const std::uint64_t id = SeedPlan::child(base, static_cast<std::uint64_t>(r));
    DriverBundle bundle(plan, id, n + m, grid.T);

    // Independent pool approximating the limit law inside this replication.
    ParticleSystem pool(model, init, bundle, grid, {1, nullptr, n, m});
    std::vector<double> times;
    std::vector<EmpiricalMeasure> pools;
    times.reserve(static_cast<std::size_t>(pool.total_steps()) + 1);
    pools.reserve(static_cast<std::size_t>(pool.total_steps()) + 1);
    times.push_back(0.0);
    pools.push_back(pool.empirical());
    while (!pool.done()) {
      pool.step();
      times.push_back(pool.time());
      pools.push_back(pool.empirical());
    }
    const LawFlow flow(std::move(times), std::move(pools));

    ParticleSystem interacting(model, init, bundle, grid, {1, nullptr, 0, n});
    ParticleSystem limit(model, init, bundle, grid, {1, &flow, 0, n});
    reps[static_cast<std::size_t>(r)] = mean_sup_power(lockstep_sup_diff(interacting, limit), p);
  });
  return aggregate(static_cast<double>(n_particles), reps, p);
}

// ---------------------------------------------------------------------------
// Euler step-size sweep

std::vector<ErrorSample> euler_error(const ModelSpec& model, const InitialLaw& init,
                                     int n_particles, double horizon,
                                     const std::vector<double>& h_list, double h_ref,
                                     int replications, double p, const SeedPlan& plan,
                                     int threads) {
  require_moment_order(p, "euler_error");
  require_replications(replications, "euler_error");
  if (n_particles < 1) throw std::invalid_argument("euler_error: need at least one particle");
  if (h_list.empty()) throw std::invalid_argument("euler_error: empty step list");
  if (!(h_ref > 0.0)) throw std::invalid_argument("euler_error: reference step must be positive");
  SimGrid{horizon, h_ref}.validate();

  std::vector<int> substeps(h_list.size());
  double h_min = h_list.front();
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    if (h_list[k] > horizon * (1.0 + 1e-9))
      throw std::invalid_argument("euler_error: step exceeds the horizon");
    const double ratio = h_list[k] / h_ref;
    const auto near = static_cast<long long>(std::llround(ratio));
    if (near < 1 || std::abs(ratio - static_cast<double>(near)) > 1e-9 * ratio ||
        (near & (near - 1)) != 0) {
      throw std::invalid_argument(
          "euler_error: every h must be a power-of-two multiple of h_ref (exact grid nesting)");
    }
    substeps[k] = static_cast<int>(near);
    h_min = std::min(h_min, h_list[k]);
  }
  if (!(h_ref < h_min / 4.0))
    throw std::invalid_argument("euler_error: h_ref must be smaller than min(h)/4");

  const auto n = static_cast<std::uint32_t>(n_particles);
  const std::uint64_t base = SeedPlan::child(plan.experiment("euler"), n);

  // One bundle per replication, shared across every h: all step sizes are
  // compared on identical noise, so differences are pure discretisation.
  std::vector<std::vector<double>> reps(h_list.size(),
                                        std::vector<double>(static_cast<std::size_t>(replications)));
  run_tasks(replications, threads, [&](int r) {
    const std::uint64_t id = SeedPlan::child(base, static_cast<std::uint64_t>(r));
    DriverBundle bundle(plan, id, n, horizon);
    const SimGrid integration{horizon, h_ref};
    for (std::size_t k = 0; k < h_list.size(); ++k) {
      ParticleSystem scheme(model, init, bundle, integration, {substeps[k], nullptr, 0, n});
      ParticleSystem reference(model, init, bundle, integration, {1, nullptr, 0, n});
      reps[k][static_cast<std::size_t>(r)] = mean_sup_power(lockstep_sup_diff(scheme, reference), p);
    }
  });

  std::vector<ErrorSample> out;
  out.reserve(h_list.size());
  for (std::size_t k = 0; k < h_list.size(); ++k) out.push_back(aggregate(h_list[k], reps[k], p));
  return out;
}

// ---------------------------------------------------------------------------
// Empirical-measure transport accuracy

RateReport fg_rate(const InitialLaw& sampler, const std::vector<int>& sample_counts,
                   int replications, const SeedPlan& plan, int threads) {
  require_replications(replications, "fg_rate");
  if (sample_counts.size() < 3)
    throw std::invalid_argument("fg_rate: need at least 3 cohort sizes to fit a rate");
  for (int n : sample_counts)
    if (n < 1) throw std::invalid_argument("fg_rate: cohort sizes must be positive");
  if (!std::isfinite(sampler.abs_moment(5.0)))
    throw std::invalid_argument("fg_rate: sampler needs a finite 5th moment");

  const std::uint64_t base = plan.experiment("fg");
  const int cohorts = static_cast<int>(sample_counts.size());
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(cohorts),
                                        std::vector<double>(static_cast<std::size_t>(replications)));
  run_tasks(cohorts * replications, threads, [&](int task) {
    const int c = task / replications;
    const int r = task % replications;
    const int n = sample_counts[static_cast<std::size_t>(c)];
    const std::uint64_t id =
        SeedPlan::child(SeedPlan::child(base, static_cast<std::uint64_t>(n)),
                        static_cast<std::uint64_t>(r));
    KeyedStream sa(plan, id, 0, StreamKind::initial);
    KeyedStream sb(plan, id, 1, StreamKind::initial);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = sampler.draw(sa);
    for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = sampler.draw(sb);
    const double w = wasserstein_p(EmpiricalMeasure(std::move(a)), EmpiricalMeasure(std::move(b)), 2.0);
    reps[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = 0.5 * w * w;
  });

  RateReport report;
  report.study = "fg";
  report.samples.reserve(static_cast<std::size_t>(cohorts));
  for (int c = 0; c < cohorts; ++c)
    report.samples.push_back(
        aggregate(static_cast<double>(sample_counts[static_cast<std::size_t>(c)]),
                  reps[static_cast<std::size_t>(c)], 2.0));
  report.theory_slope = theory_fg_slope(&report.theory_note);
  try {
    RateReport fitted = fit_rate(report.samples);
    report.fit = std::move(fitted.fit);
  } catch (const std::invalid_argument& ex) {
    report.note = std::string("fit unavailable: ") + ex.what();
  }
  return report;
}

}  // namespace mvsde
