#pragma once

#include <array>
#include <cstdint>

namespace mvsde {

// ===========================================================================
// Counter-based generation.  Every random quantity in the library is a pure
// function of (master seed, experiment id, stream id, kind, sequence index),
// so simulations are reproducible regardless of evaluation order, thread
// scheduling, or which other streams were consumed in between.  Coupled
// schemes observe identical noise by construction: they address the same
// counters.
// ===========================================================================

// Philox4x32-10 block cipher (Salmon et al., SC'11 "Parallel random numbers:
// as easy as 1, 2, 3").  Verified against the reference test vectors.
struct Philox4x32 {
  static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                            const std::array<std::uint32_t, 2>& key);
};

// SplitMix64 finaliser, used for key derivation only (never as a stream).
std::uint64_t mix64(std::uint64_t x);

// FNV-1a, for hashing experiment labels and artifact contents.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(const char* s);

// Master seed plus naming helpers for derived experiment ids.
struct SeedPlan {
  std::uint64_t master_seed = 1;

  // Stable id for a named experiment; extra components (replication index,
  // cohort size, ...) fold in one at a time.
  std::uint64_t experiment(const char* label) const;
  static std::uint64_t child(std::uint64_t id, std::uint64_t component);
};

// Which driver a stream feeds.  Part of the counter, so the four streams of
// one particle never collide.
enum class StreamKind : std::uint32_t {
  brownian = 0,
  jumps0 = 1,
  jumps1 = 2,
  initial = 3,
};

// One logical random stream, either consumed sequentially (next_*) or
// addressed directly by sequence index (*_at).  Addressed draws are what
// make the lazily evaluated Brownian tree order-independent.
class KeyedStream {
 public:
  KeyedStream(const SeedPlan& plan, std::uint64_t experiment_id, std::uint32_t stream_id,
              StreamKind kind);

  // Two 64-bit words per counter block.
  std::uint64_t word_at(std::uint64_t seq, int half) const;

  double uniform_at(std::uint64_t seq, int half) const;  // (0, 1]
  double normal_at(std::uint64_t seq) const;             // N(0,1), one block

  // Sequential interface over the same address space.
  std::uint64_t next_word();
  double next_uniform();  // (0, 1]
  double next_normal();
  // Knuth multiplication method, chunked so it stays usable for large means.
  std::uint64_t next_poisson(double mean);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_id_;
  std::uint32_t kind_;
  std::uint64_t cursor_ = 0;
  std::uint64_t pending_word_ = 0;
  bool has_pending_word_ = false;
};

}  // namespace mvsde
