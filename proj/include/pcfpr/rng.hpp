#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace pcfpr {

/// splitmix64 mix step; good avalanche, used only for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a salt
/// (candidate index, scan index, epoch, ...). Items processed in parallel
/// each get their own derived seed so results do not depend on worker count.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt + 0x51ab6a5ce18be5d1ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Unbiased index in [0, n) via rejection. Hand-rolled because the standard
/// distributions are implementation-defined and we promise bit-exact streams.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % static_cast<std::uint64_t>(n));
}

/// Double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

/// Standard normal via Box-Muller (deterministic, stateless between calls).
inline double normal_unit(std::mt19937_64& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Poisson count via inversion (suitable for the small lambdas used here).
inline int poisson_draw(std::mt19937_64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double l = std::exp(-lambda);
  int k = 0;
  double prod = uniform_unit(rng);
  while (prod > l) {
    ++k;
    prod *= uniform_unit(rng);
  }
  return k;
}

}  // namespace pcfpr
