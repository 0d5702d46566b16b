#pragma once

#include <cstdint>
#include <random>

namespace photonstat {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for substream `index` of `parent`:
///   derive_seed(p, i) = splitmix64(p ^ splitmix64(i + 1))
/// Used for per-run seeds (index = run_id) and per-stage seeds within a run.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 1));
}

/// Stage indices for derive_seed(run_seed, stage).
enum class SeedStage : std::uint64_t { Arrivals = 1, Emission = 2, Detection = 3, Bootstrap = 4 };

constexpr std::uint64_t stage_seed(std::uint64_t run_seed, SeedStage stage) noexcept {
  return derive_seed(run_seed, static_cast<std::uint64_t>(stage));
}

}  // namespace photonstat
