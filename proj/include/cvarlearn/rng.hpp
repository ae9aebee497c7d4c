#pragma once

#include <cstdint>
#include <random>

namespace cvarlearn {

/// All stochastic paths draw from this engine. mt19937_64 output is fixed by the
/// standard, so sequences are identical across standard libraries.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of trial `trial` under `master`: mix(master + trial).
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) noexcept {
  return mix_seed(master + trial);
}

/// Seed of agent `agent`'s noise stream inside a trial.
constexpr std::uint64_t agent_stream_seed(std::uint64_t trial, std::uint64_t agent) noexcept {
  return mix_seed(mix_seed(trial) ^ (0xA5A5A5A5A5A5A5A5ULL + agent));
}

/// Uniform double in [0, 1) from the top 53 bits. Portable, unlike
/// std::uniform_real_distribution whose algorithm is implementation-defined.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace cvarlearn
