#pragma once

#include <cstdint>

namespace gaitmtl {

/// SplitMix64 finalizer; used to derive independent, reproducible seeds for
/// sub-streams (initialization, shuffling, splitting) from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace seed_stream {
inline constexpr std::uint64_t kBackboneInit = 1;
inline constexpr std::uint64_t kGprHeadInit = 2;
inline constexpr std::uint64_t kTcHeadInit = 3;
inline constexpr std::uint64_t kScratchInit = 4;
inline constexpr std::uint64_t kMlpInit = 5;
inline constexpr std::uint64_t kGprSplit = 10;
inline constexpr std::uint64_t kTcSplit = 11;
inline constexpr std::uint64_t kShuffle = 12;
inline constexpr std::uint64_t kTrial = 20;
}  // namespace seed_stream

}  // namespace gaitmtl
