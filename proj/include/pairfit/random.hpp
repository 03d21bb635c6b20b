#pragma once

#include <cstdint>
#include <random>

namespace pairfit {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20110319;

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of the `counter`-th independent task (bootstrap draw, replication)
// spawned from `master`. Depends only on (master, counter), never on which
// worker runs the task.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return mix64(mix64(master) ^ mix64(counter + 0x5851F42D4C957F2DULL));
}

}  // namespace pairfit
