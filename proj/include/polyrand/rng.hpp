#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace polyrand {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based sub-seed: the same (master, path) always yields the same
/// seed, whichever thread asks for it.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(master);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fair random sign.
inline double random_sign(Rng& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

}  // namespace polyrand
