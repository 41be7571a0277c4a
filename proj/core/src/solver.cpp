#include "mvsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <utility>

namespace mvsde {

namespace {

constexpr double kBlowUp = 1e12;
constexpr double kTimeEps = 1e-12;

bool exploded(double x) { return !std::isfinite(x) || std::abs(x) > kBlowUp; }

std::vector<double> draw_initial(const InitialLaw& init, const DriverBundle& bundle,
                                 std::uint32_t first, std::uint32_t count) {
  std::vector<double> x(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    KeyedStream s = bundle.initial_stream(first + i);
    x[i] = init.draw(s);
  }
  return x;
}

}  // namespace

// --------------------------------------------------------------------------
// SimGrid

int SimGrid::steps() const {
  const double raw = T / h;
  const auto near = static_cast<int>(std::llround(raw));
  if (near >= 1 && std::abs(raw - near) <= 1e-9 * raw) return near;
  return static_cast<int>(std::ceil(raw - kTimeEps));
}

double SimGrid::time(int k) const {
  if (k <= 0) return 0.0;
  if (k >= steps()) return T;
  const double t = k * h;
  return t < T ? t : T;
}

double SimGrid::project(double t) const {
  if (t <= 0.0) return 0.0;
  const double k = std::floor(t / h + 1e-9);
  const double s = k * h;
  return s < T ? s : T;
}

void SimGrid::validate() const {
  if (!(std::isfinite(T) && T > 0.0)) throw std::invalid_argument("SimGrid: T must be positive");
  if (!(std::isfinite(h) && h > 0.0)) throw std::invalid_argument("SimGrid: h must be positive");
  if (h > T * (1.0 + 1e-9)) throw std::invalid_argument("SimGrid: h exceeds the horizon");
}

// --------------------------------------------------------------------------
// LawFlow

LawFlow::LawFlow(std::vector<double> times, std::vector<EmpiricalMeasure> pools)
    : times_(std::move(times)), pools_(std::move(pools)) {
  if (times_.empty() || times_.size() != pools_.size())
    throw std::invalid_argument("LawFlow: need one pool per checkpoint time");
  const std::size_t n = pools_.front().size();
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k])) throw std::invalid_argument("LawFlow: non-finite checkpoint time");
    if (k > 0 && !(times_[k] > times_[k - 1]))
      throw std::invalid_argument("LawFlow: checkpoint times must be strictly increasing");
    if (pools_[k].size() != n)
      throw std::invalid_argument("LawFlow: all checkpoint pools must share one size");
  }
}

LawFlow LawFlow::constant(EmpiricalMeasure pool) {
  std::vector<EmpiricalMeasure> pools;
  pools.push_back(std::move(pool));
  return LawFlow({0.0}, std::move(pools));
}

const EmpiricalMeasure& LawFlow::lookup(double t) const {
  if (times_.size() == 1) return pools_.front();
  auto it = std::upper_bound(times_.begin(), times_.end(), t + kTimeEps);
  if (it == times_.begin()) throw std::out_of_range("LawFlow: no checkpoint at or before query time");
  return pools_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

void LawFlow::require_covers(const SimGrid& grid) const {
  if (times_.size() == 1) return;  // constant in time, covers everything
  if (times_.front() > kTimeEps)
    throw std::invalid_argument("LawFlow: flow misses t = 0");
  const double last_freeze = grid.time(grid.steps() - 1);
  if (times_.back() < last_freeze - kTimeEps)
    throw std::invalid_argument("LawFlow: flow ends before the final scheme step");
}

// --------------------------------------------------------------------------
// BlowUpError

BlowUpError::BlowUpError(std::uint32_t particle_index, double at_time)
    : std::runtime_error("particle " + std::to_string(particle_index) + " blew up at t = " +
                         std::to_string(at_time)),
      particle(particle_index),
      time(at_time) {}

// --------------------------------------------------------------------------
// ParticleSystem

namespace {

ParticleSystem::Options resolve_options(const DriverBundle& bundle, const SimGrid& grid,
                                        ParticleSystem::Options opts) {
  grid.validate();
  if (std::abs(grid.T - bundle.horizon()) > kTimeEps)
    throw std::invalid_argument("ParticleSystem: grid horizon differs from the driver horizon");
  if (opts.freeze_every < 1)
    throw std::invalid_argument("ParticleSystem: freeze_every must be >= 1");
  const std::uint32_t total = bundle.particles();
  if (opts.first_particle >= total)
    throw std::invalid_argument("ParticleSystem: first_particle outside the bundle");
  if (opts.count == 0) opts.count = total - opts.first_particle;
  if (opts.first_particle + opts.count > total)
    throw std::invalid_argument("ParticleSystem: particle range outside the bundle");
  return opts;
}

}  // namespace

ParticleSystem::ParticleSystem(const ModelSpec& model, const InitialLaw& init,
                               const DriverBundle& bundle, const SimGrid& integration,
                               Options opts)
    : model_(model),
      bundle_(bundle),
      grid_(integration),
      opts_(resolve_options(bundle, integration, opts)),
      positions_(draw_initial(init, bundle, opts_.first_particle, opts_.count)),
      empirical_(positions_),
      frozen_x_(positions_),
      frozen_own_(positions_) {
  total_steps_ = grid_.steps();
  if (opts_.law) opts_.law->require_covers(grid_);
  const std::uint32_t n = opts_.count;
  drift_.resize(n);
  diff_.resize(n);
  sched0_.resize(n);
  sched1_.resize(n);
  cur0_.assign(n, 0);
  cur1_.assign(n, 0);
  sup_abs_.resize(n);
  jump_times_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t g = opts_.first_particle + i;
    if (exploded(positions_[i])) throw BlowUpError(g, 0.0);
    sup_abs_[i] = std::abs(positions_[i]);
    sched0_[i] = bundle_.jump_schedule(g, 0, model_.nu0);
    sched1_[i] = bundle_.jump_schedule(g, 1, model_.nu1);
    jump_times_[i].resize(sched0_[i].times.size() + sched1_[i].times.size());
    std::merge(sched0_[i].times.begin(), sched0_[i].times.end(), sched1_[i].times.begin(),
               sched1_[i].times.end(), jump_times_[i].begin());
  }
}

double ParticleSystem::time() const { return grid_.time(step_); }

void ParticleSystem::refresh_frozen(double t0) {
  frozen_x_ = positions_;
  if (opts_.law) {
    frozen_mu_ = &opts_.law->lookup(t0);
  } else {
    frozen_own_ = empirical_;
    frozen_mu_ = &frozen_own_;
  }
  const EmpiricalMeasure& mu = *frozen_mu_;
  for (std::size_t i = 0; i < frozen_x_.size(); ++i) {
    const double x = frozen_x_[i];
    drift_[i] = model_.b1(x, mu) + model_.b2(x, mu) - compensator_integral(model_, x, mu);
    diff_[i] = model_.sigma(x);
  }
}

void ParticleSystem::step(JumpTrace* trace) {
  if (done()) throw std::logic_error("ParticleSystem: stepped past the horizon");
  const double t0 = grid_.time(step_);
  const double t1 = grid_.time(step_ + 1);
  if (step_ % opts_.freeze_every == 0) refresh_frozen(t0);
  const EmpiricalMeasure& mu = *frozen_mu_;
  const std::int64_t ka = bundle_.skeleton_index(t0);
  const std::int64_t kb = bundle_.skeleton_index(t1);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  const std::uint32_t n = count();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t g = opts_.first_particle + i;
    const double fx = frozen_x_[i];
    double x = positions_[i];
    double seg_t = t0;
    std::int64_t seg_k = ka;
    const JumpSchedule& s0 = sched0_[i];
    const JumpSchedule& s1 = sched1_[i];
    std::size_t& c0 = cur0_[i];
    std::size_t& c1 = cur1_[i];
    // Events in (t0, t1], both drivers merged in time order (driver 0 wins
    // ties).  Drift and diffusion fill the gaps between events with the
    // frozen coefficients; the Brownian piece splits along skeleton indices,
    // so the sub-increments recombine to the full step increment exactly.
    while (true) {
      const double u0 = c0 < s0.times.size() ? s0.times[c0] : kInf;
      const double u1 = c1 < s1.times.size() ? s1.times[c1] : kInf;
      const double u = u0 <= u1 ? u0 : u1;
      if (!(u <= t1)) break;
      const std::int64_t uk = bundle_.skeleton_index(u);
      x += drift_[i] * (u - seg_t) + diff_[i] * bundle_.brownian_increment_between(g, seg_k, uk);
      if (u0 <= u1) {
        x += model_.f0(fx, mu, s0.marks[c0]);
        ++c0;
      } else {
        x += model_.f1(fx, mu, s1.marks[c1]);
        ++c1;
      }
      seg_t = u;
      seg_k = uk;
      if (exploded(x)) throw BlowUpError(g, u);
      if (std::abs(x) > sup_abs_[i]) sup_abs_[i] = std::abs(x);
      if (trace) trace->emplace_back(i, x);
    }
    x += drift_[i] * (t1 - seg_t) + diff_[i] * bundle_.brownian_increment_between(g, seg_k, kb);
    if (exploded(x)) throw BlowUpError(g, t1);
    if (std::abs(x) > sup_abs_[i]) sup_abs_[i] = std::abs(x);
    positions_[i] = x;
  }
  empirical_ = EmpiricalMeasure(positions_);
  ++step_;
}

void ParticleSystem::run() {
  while (!done()) step();
}

// --------------------------------------------------------------------------
// Free-standing drivers of the system

ParticleSystemState step_interacting(const ModelSpec& model, const ParticleSystemState& state,
                                     const SimGrid& grid, const DriverBundle& bundle,
                                     StepMode mode) {
  (void)mode;  // a single step freezes at state.time under either discipline
  grid.validate();
  if (std::abs(grid.T - bundle.horizon()) > kTimeEps)
    throw std::invalid_argument("step_interacting: grid horizon differs from the driver horizon");
  const std::size_t n = state.positions.size();
  if (n == 0 || n > bundle.particles())
    throw std::invalid_argument("step_interacting: state size does not fit the bundle");
  if (state.measure.size() != n)
    throw std::invalid_argument("step_interacting: measure does not match the positions");

  const double t0 = state.time;
  const double t1 = std::min(t0 + grid.h, grid.T);
  if (!(t0 >= 0.0 && t0 < grid.T))
    throw std::invalid_argument("step_interacting: state time outside [0, T)");
  const EmpiricalMeasure& mu = state.measure;
  const std::int64_t ka = bundle.skeleton_index(t0);
  const std::int64_t kb = bundle.skeleton_index(t1);

  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::uint32_t>(i);
    const double fx = state.positions[i];
    const double drift = model.b1(fx, mu) + model.b2(fx, mu) - compensator_integral(model, fx, mu);
    const double diff = model.sigma(fx);
    const JumpSchedule s0 = bundle.jump_schedule(g, 0, model.nu0);
    const JumpSchedule s1 = bundle.jump_schedule(g, 1, model.nu1);
    std::size_t c0 = std::upper_bound(s0.times.begin(), s0.times.end(), t0) - s0.times.begin();
    std::size_t c1 = std::upper_bound(s1.times.begin(), s1.times.end(), t0) - s1.times.begin();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double x = fx;
    double seg_t = t0;
    std::int64_t seg_k = ka;
    while (true) {
      const double u0 = c0 < s0.times.size() ? s0.times[c0] : kInf;
      const double u1 = c1 < s1.times.size() ? s1.times[c1] : kInf;
      const double u = u0 <= u1 ? u0 : u1;
      if (!(u <= t1)) break;
      const std::int64_t uk = bundle.skeleton_index(u);
      x += drift * (u - seg_t) + diff * bundle.brownian_increment_between(g, seg_k, uk);
      if (u0 <= u1) {
        x += model.f0(fx, mu, s0.marks[c0]);
        ++c0;
      } else {
        x += model.f1(fx, mu, s1.marks[c1]);
        ++c1;
      }
      seg_t = u;
      seg_k = uk;
      if (exploded(x)) throw BlowUpError(g, u);
    }
    x += drift * (t1 - seg_t) + diff * bundle.brownian_increment_between(g, seg_k, kb);
    if (exploded(x)) throw BlowUpError(g, t1);
    next[i] = x;
  }
  EmpiricalMeasure measure(next);
  return ParticleSystemState{t1, std::move(next), std::move(measure)};
}

namespace {

SimulationResult record_run(ParticleSystem& sys) {
  SimulationResult out;
  out.times.reserve(static_cast<std::size_t>(sys.total_steps()) + 1);
  out.positions.reserve(static_cast<std::size_t>(sys.total_steps()) + 1);
  out.times.push_back(0.0);
  out.positions.push_back(sys.positions());
  while (!sys.done()) {
    sys.step();
    out.times.push_back(sys.time());
    out.positions.push_back(sys.positions());
  }
  out.sup_abs = sys.running_sup_abs();
  out.jump_times = sys.jump_times();
  return out;
}

}  // namespace

SimulationResult simulate_interacting(const ModelSpec& model, const InitialLaw& init,
                                      const SimGrid& grid, const DriverBundle& bundle,
                                      StepMode mode, int substeps, std::uint32_t first_particle,
                                      std::uint32_t count) {
  grid.validate();
  if (substeps < 1) throw std::invalid_argument("simulate_interacting: substeps must be >= 1");
  SimGrid integration{grid.T, grid.h / substeps};
  ParticleSystem::Options opts;
  opts.freeze_every = mode == StepMode::frozen ? substeps : 1;
  opts.first_particle = first_particle;
  opts.count = count;
  ParticleSystem sys(model, init, bundle, integration, opts);
  return record_run(sys);
}

SimulationResult simulate_limit_coupled(const ModelSpec& model, const InitialLaw& init,
                                        const SimGrid& grid, const DriverBundle& bundle,
                                        const LawFlow& law, std::uint32_t first_particle,
                                        std::uint32_t count) {
  grid.validate();
  ParticleSystem::Options opts;
  opts.law = &law;
  opts.first_particle = first_particle;
  opts.count = count;
  ParticleSystem sys(model, init, bundle, grid, opts);
  return record_run(sys);
}

LawFlow law_flow_from(const SimulationResult& sim) {
  std::vector<EmpiricalMeasure> pools;
  pools.reserve(sim.positions.size());
  for (const auto& row : sim.positions) pools.emplace_back(row);
  return LawFlow(sim.times, std::move(pools));
}

PicardResult picard_flow(const ModelSpec& model, const InitialLaw& init, const SimGrid& grid,
                         const DriverBundle& bundle, int k_max, double tol) {
  grid.validate();
  if (bundle.particles() < 2) throw std::invalid_argument("picard_flow: pool needs M >= 2");
  if (k_max < 1) throw std::invalid_argument("picard_flow: k_max must be >= 1");
  if (std::isnan(tol) || tol <= 0.0) throw std::invalid_argument("picard_flow: tol must be positive");

  LawFlow prev =
      LawFlow::constant(EmpiricalMeasure(draw_initial(init, bundle, 0, bundle.particles())));
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    SimulationResult sim = simulate_limit_coupled(model, init, grid, bundle, prev);
    LawFlow next = law_flow_from(sim);
    double d = 0.0;
    for (std::size_t j = 0; j < next.checkpoints(); ++j) {
      const double w = wasserstein_p(next.pool(j), prev.lookup(next.times()[j]), 2.0);
      if (w > d) d = w;
    }
    distances.push_back(d);
    prev = std::move(next);
    if (d < tol) return PicardResult{std::move(prev), std::move(distances), true};
  }
  return PicardResult{std::move(prev), std::move(distances), false};
}

}  // namespace mvsde
