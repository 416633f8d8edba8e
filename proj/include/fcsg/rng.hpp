#pragma once

#include <cstdint>
#include <random>

namespace fcsg {

using Rng = std::mt19937_64;

// Draws built from raw engine output so seeded runs are bit-reproducible
// across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_pm_half(Rng& rng) { return uniform01(rng) - 0.5; }

inline double uniform_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Modulo bias is negligible for the small n used here.
  return rng() % n;
}

}  // namespace fcsg
