#include "mvsde/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace mvsde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(const std::array<std::uint32_t, 4>& c,
                                               const std::array<std::uint32_t, 2>& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kPhiloxM0, c[0], hi0, lo0);
  mulhilo(kPhiloxM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(const std::array<std::uint32_t, 4>& counter,
                                               const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    c = round_once(c, k);
  }
  return c;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const char* s) { return fnv1a64(s, std::strlen(s)); }

std::uint64_t SeedPlan::experiment(const char* label) const {
  return mix64(master_seed ^ fnv1a64(label));
}

std::uint64_t SeedPlan::child(std::uint64_t id, std::uint64_t component) {
  return mix64(id ^ mix64(component + 0x517CC1B727220A95ull));
}

KeyedStream::KeyedStream(const SeedPlan& plan, std::uint64_t experiment_id,
                         std::uint32_t stream_id, StreamKind kind)
    : stream_id_(stream_id), kind_(static_cast<std::uint32_t>(kind)) {
  const std::uint64_t k = mix64(plan.master_seed ^ mix64(experiment_id));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::uint64_t KeyedStream::word_at(std::uint64_t seq, int half) const {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(seq),
      static_cast<std::uint32_t>(seq >> 32),
      stream_id_,
      kind_,
  };
  const auto out = Philox4x32::block(counter, key_);
  return half == 0 ? (static_cast<std::uint64_t>(out[1]) << 32) | out[0]
                   : (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
}

double KeyedStream::uniform_at(std::uint64_t seq, int half) const {
  // (0, 1]: the +1 keeps log() of the result finite.
  return (static_cast<double>(word_at(seq, half) >> 11) + 1.0) * 0x1.0p-53;
}

double KeyedStream::normal_at(std::uint64_t seq) const {
  const double u1 = uniform_at(seq, 0);
  const double u2 = uniform_at(seq, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t KeyedStream::next_word() {
  if (has_pending_word_) {
    has_pending_word_ = false;
    return pending_word_;
  }
  const std::uint64_t seq = cursor_++;
  pending_word_ = word_at(seq, 1);
  has_pending_word_ = true;
  return word_at(seq, 0);
}

double KeyedStream::next_uniform() {
  return (static_cast<double>(next_word() >> 11) + 1.0) * 0x1.0p-53;
}

double KeyedStream::next_normal() {
  // Box-Muller on a fresh block so the pair comes from one counter.
  has_pending_word_ = false;
  const std::uint64_t seq = cursor_++;
  return normal_at(seq);
}

std::uint64_t KeyedStream::next_poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson: mean must be finite and non-negative");
  }
  std::uint64_t total = 0;
  // exp(-mean) underflows near 745; split large means into halves.
  while (mean > 500.0) {
    const double half_mean = mean / 2.0;
    total += next_poisson(half_mean);
    mean -= half_mean;
  }
  const double floor = std::exp(-mean);
  double prod = 1.0;
  std::uint64_t k = 0;
  for (;;) {
    prod *= next_uniform();
    if (prod <= floor) break;
    ++k;
  }
  return total + k;
}

}  // namespace mvsde
