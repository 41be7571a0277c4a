#include "mvsde/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mvsde {

// ---------------------------------------------------------------------------
// MarkMeasure
// ---------------------------------------------------------------------------

MarkMeasure MarkMeasure::discrete(std::vector<std::pair<double, double>> atoms_and_weights) {
  MarkMeasure m;
  m.family_ = Family::discrete;
  m.atoms_ = std::move(atoms_and_weights);
  double mass = 0.0;
  for (const auto& [u, w] : m.atoms_) {
    if (!std::isfinite(u) || !std::isfinite(w)) {
      throw std::invalid_argument("mark measure: non-finite atom or weight");
    }
    if (w <= 0.0) throw std::invalid_argument("mark measure: weights must be positive");
    mass += w;
    m.cumulative_.push_back(mass);
  }
  m.total_mass_ = mass;
  return m;
}

MarkMeasure MarkMeasure::gaussian(double mean, double sd, double total_mass) {
  if (!(sd > 0.0)) throw std::invalid_argument("mark measure: sd must be positive");
  if (!(total_mass >= 0.0) || !std::isfinite(total_mass)) {
    throw std::invalid_argument("mark measure: total mass must be finite and non-negative");
  }
  MarkMeasure m;
  m.family_ = Family::gaussian;
  m.mean_ = mean;
  m.sd_ = sd;
  m.total_mass_ = total_mass;
  return m;
}

void MarkMeasure::declare_quadrature(std::vector<std::pair<double, double>> nodes_and_weights,
                                     double error_bound) {
  if (is_discrete()) {
    throw std::runtime_error("mark measure: discrete measures integrate exactly, no rule needed");
  }
  if (nodes_and_weights.empty()) throw std::invalid_argument("mark measure: empty quadrature");
  if (!(error_bound >= 0.0)) throw std::invalid_argument("mark measure: negative error bound");
  quad_ = std::move(nodes_and_weights);
  quad_error_ = error_bound;
}

double MarkMeasure::quadrature_error_bound() const {
  if (is_discrete()) return 0.0;
  if (quad_.empty()) throw std::runtime_error("mark measure: no quadrature rule declared");
  return quad_error_;
}

const std::vector<std::pair<double, double>>& MarkMeasure::nodes() const {
  if (is_discrete()) return atoms_;
  if (quad_.empty()) {
    throw std::runtime_error(
        "mark measure: continuous marks need a declared quadrature rule to integrate");
  }
  return quad_;
}

double MarkMeasure::sample(KeyedStream& stream) const {
  if (family_ == Family::gaussian) return mean_ + sd_ * stream.next_normal();
  if (atoms_.empty() || total_mass_ <= 0.0) {
    throw std::runtime_error("mark measure: cannot sample from a massless measure");
  }
  const double target = stream.next_uniform() * total_mass_;
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                         atoms_.size() - 1);
  return atoms_[idx].first;
}

// ---------------------------------------------------------------------------
// DriverBundle
// ---------------------------------------------------------------------------

namespace {

constexpr double kLattice = 0x1.0p-31;
constexpr double kInvLattice = 0x1.0p31;

// Round to the shared increment lattice q Z.  Scaling by a power of two is
// exact, so this is exactly "nearest multiple of q".
inline double quantize(double x) { return std::nearbyint(x * kInvLattice) * kLattice; }

std::vector<std::uint32_t> identity_keys(std::uint32_t n) {
  std::vector<std::uint32_t> keys(n);
  std::iota(keys.begin(), keys.end(), 0u);
  return keys;
}

inline std::uint64_t node_seq(int level, std::int64_t index) {
  return (static_cast<std::uint64_t>(level) << 40) | static_cast<std::uint64_t>(index);
}

}  // namespace

DriverBundle::DriverBundle(SeedPlan plan, std::uint64_t experiment_id, std::uint32_t n_particles,
                           double horizon, int skeleton_depth)
    : DriverBundle(plan, experiment_id, identity_keys(n_particles), horizon, skeleton_depth) {}

DriverBundle::DriverBundle(SeedPlan plan, std::uint64_t experiment_id,
                           std::vector<std::uint32_t> particle_keys, double horizon,
                           int skeleton_depth)
    : plan_(plan),
      experiment_id_(experiment_id),
      keys_(std::move(particle_keys)),
      horizon_(horizon),
      depth_(skeleton_depth) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw std::invalid_argument("driver bundle: horizon must be finite and positive");
  }
  if (depth_ < 1 || depth_ > 34) {
    throw std::invalid_argument("driver bundle: skeleton depth out of range [1, 34]");
  }
  leaves_ = std::int64_t{1} << depth_;
  half_sqrt_len_.resize(static_cast<std::size_t>(depth_) + 1);
  for (int l = 0; l <= depth_; ++l) {
    half_sqrt_len_[static_cast<std::size_t>(l)] = 0.5 * std::sqrt(horizon_ * std::pow(2.0, -l));
  }
}

std::int64_t DriverBundle::skeleton_index(double t) const {
  const double scaled = t / horizon_ * static_cast<double>(leaves_);
  const auto idx = static_cast<std::int64_t>(std::llround(scaled));
  return std::clamp<std::int64_t>(idx, 0, leaves_);
}

double DriverBundle::skeleton_time(std::int64_t index) const {
  return horizon_ * (static_cast<double>(index) / static_cast<double>(leaves_));
}

KeyedStream DriverBundle::brownian_stream(std::uint32_t i) const {
  return KeyedStream(plan_, experiment_id_, keys_.at(i), StreamKind::brownian);
}

// Sum of node increments covering [a, b] within node (level, index); the
// node's own value is passed down so each bridge variable is drawn once per
// descent.  All summands are lattice points, so grouping is irrelevant.
double DriverBundle::node_descend(const KeyedStream& s, std::int64_t a, std::int64_t b, int level,
                                  std::int64_t index, double value) const {
  const int shift = depth_ - level;
  const std::int64_t lo = index << shift;
  const std::int64_t hi = (index + 1) << shift;
  if (b <= lo || hi <= a) return 0.0;
  if (a <= lo && hi <= b) return value;
  const double noise = half_sqrt_len_[static_cast<std::size_t>(level)] *
                       s.normal_at(node_seq(level + 1, 2 * index));
  const double left = quantize(0.5 * value + noise);
  const double right = value - left;
  return node_descend(s, a, b, level + 1, 2 * index, left) +
         node_descend(s, a, b, level + 1, 2 * index + 1, right);
}

double DriverBundle::brownian_increment_between(std::uint32_t i, std::int64_t a,
                                                std::int64_t b) const {
  if (a > b || a < 0 || b > leaves_) {
    throw std::invalid_argument("brownian increment: index range outside skeleton");
  }
  if (a == b) return 0.0;
  const KeyedStream s = brownian_stream(i);
  const double root = quantize(std::sqrt(horizon_) * s.normal_at(node_seq(0, 0)));
  return node_descend(s, a, b, 0, 0, root);
}

double DriverBundle::brownian_increment(std::uint32_t i, double t0, double t1) const {
  return brownian_increment_between(i, skeleton_index(t0), skeleton_index(t1));
}

std::vector<double> DriverBundle::brownian_increments(std::uint32_t i,
                                                      std::span<const double> grid) const {
  if (grid.size() < 2) throw std::invalid_argument("brownian increments: need at least two times");
  std::vector<double> out;
  out.reserve(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (!(grid[k] < grid[k + 1])) {
      throw std::invalid_argument("brownian increments: grid must be strictly increasing");
    }
    if (grid[k] < 0.0 || grid[k + 1] > horizon_ * (1.0 + 1e-12)) {
      throw std::invalid_argument("brownian increments: grid leaves [0, T]");
    }
    out.push_back(brownian_increment(i, grid[k], grid[k + 1]));
  }
  return out;
}

JumpSchedule DriverBundle::jump_schedule(std::uint32_t i, int which, const MarkMeasure& nu) const {
  if (which != 0 && which != 1) throw std::invalid_argument("jump schedule: driver index is 0 or 1");
  KeyedStream stream(plan_, experiment_id_, keys_.at(i),
                     which == 0 ? StreamKind::jumps0 : StreamKind::jumps1);
  JumpSchedule sched;
  const double rate = horizon_ * nu.total_mass();
  const std::uint64_t count = stream.next_poisson(rate);
  sched.times.resize(count);
  for (std::uint64_t k = 0; k < count; ++k) sched.times[k] = horizon_ * stream.next_uniform();
  std::sort(sched.times.begin(), sched.times.end());
  sched.marks.resize(count);
  for (std::uint64_t k = 0; k < count; ++k) sched.marks[k] = nu.sample(stream);
  return sched;
}

KeyedStream DriverBundle::initial_stream(std::uint32_t i) const {
  return KeyedStream(plan_, experiment_id_, keys_.at(i), StreamKind::initial);
}

std::shared_ptr<const DriverBundle> couple(std::shared_ptr<const DriverBundle> bundle,
                                           std::span<const SchemeRequest> requests) {
  if (!bundle) throw std::invalid_argument("couple: null bundle");
  for (const auto& req : requests) {
    if (req.horizon != bundle->horizon()) {
      throw std::invalid_argument("couple: scheme '" + req.scheme_id +
                                  "' requests horizon different from the bundle's");
    }
  }
  return bundle;
}

}  // namespace mvsde
