#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace usjepa {

// All randomness in the project flows through mt19937_64 plus the mappings
// below. The engine's output sequence is fixed by the standard, and the
// mappings avoid std::*_distribution, whose results vary across library
// implementations. Identical seeds therefore give identical draws on any
// platform.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable sub-stream derivation: mixes a base seed with a label and an index.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(base);
  for (char c : label) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  return splitmix64(h ^ splitmix64(index));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(rng);
}

// Uniform integer in [0, n). Rejection-free Lemire reduction.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) return 0;
  while (true) {
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo >= n || lo >= (0ull - n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
}

// Standard normal via Box-Muller, one value per call (the spare is dropped
// to keep the stream position independent of call parity).
inline double normal_double(Rng& rng) {
  double u1 = 0.0;
  do { u1 = uniform_double(rng); } while (u1 <= 0.0);
  double u2 = uniform_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Truncated normal in [-2s, 2s], the usual transformer weight init.
inline double trunc_normal_double(Rng& rng, double stddev) {
  while (true) {
    double z = normal_double(rng);
    if (z >= -2.0 && z <= 2.0) return z * stddev;
  }
}

}  // namespace usjepa
