#pragma once

#include <cstdint>
#include <initializer_list>
#include <algorithm>
#include <random>

namespace speakeasy {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a sequence of
/// indices. Used for replicate, permutation and tie-break streams so results
/// do not depend on execution order.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix_seed(seed, {index});
}

/// Uniform double in [0, 1) from the top 53 bits of a hash.
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

/// Unbiased integer in [0, bound) from an Rng; libstdc++'s
/// uniform_int_distribution is not guaranteed portable across releases.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

inline double uniform_real(Rng& rng) { return unit_interval(rng()); }

/// Fisher-Yates shuffle using uniform_index, for reproducible output across
/// standard library implementations.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    auto j = uniform_index(rng, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

}  // namespace speakeasy
