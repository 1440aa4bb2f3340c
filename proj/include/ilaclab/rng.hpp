#pragma once

#include <cstdint>

namespace ilac {

/// Stateless counter-based randomness. Every draw is a pure function of a
/// 64-bit stream key and a 64-bit counter, so results do not depend on which
/// thread computes them or in what order.
///
/// The mixing function is the SplitMix64 finalizer applied twice with the
/// key folded in between rounds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Key for one disorder realization under a master seed.
std::uint64_t realization_key(std::uint64_t master_seed, std::uint64_t realization_index) noexcept;

std::uint64_t draw_u64(std::uint64_t key, std::uint64_t counter) noexcept;

/// Uniform in [0, 1) with 53 random bits.
double draw_unit(std::uint64_t key, std::uint64_t counter) noexcept;

/// Sequential convenience wrapper over the counter scheme.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept { return draw_u64(key_, counter_++); }
  double unit() noexcept { return draw_unit(key_, counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * unit(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ilac
