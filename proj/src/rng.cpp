#include "ilaclab/rng.hpp"

namespace ilac {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t realization_key(std::uint64_t master_seed, std::uint64_t realization_index) noexcept {
  return mix64(mix64(master_seed) ^ mix64(realization_index + 0x632be59bd9b4e019ULL));
}

std::uint64_t draw_u64(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix64(mix64(counter ^ key) + key);
}

double draw_unit(std::uint64_t key, std::uint64_t counter) noexcept {
  return static_cast<double>(draw_u64(key, counter) >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  if (n == 0) return 0;
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

}  // namespace ilac
