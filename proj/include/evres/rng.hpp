#pragma once

#include <cmath>
#include <cstdint>

namespace evres {

// Counter-based pseudo-random values. Every draw is a pure function of
// (seed, stream, counter), so results do not depend on call order or
// thread scheduling.
inline uint64_t hash_mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t rng_u64(uint64_t seed, uint64_t stream, uint64_t counter) {
  return hash_mix(hash_mix(hash_mix(seed) ^ stream) ^ counter);
}

// Uniform in [0, 1).
inline double rng_uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
  return static_cast<double>(rng_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes counters 2k and 2k+1.
inline double rng_normal(uint64_t seed, uint64_t stream, uint64_t counter) {
  const double u1 = rng_uniform(seed, stream, 2 * counter);
  const double u2 = rng_uniform(seed, stream, 2 * counter + 1);
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace evres
