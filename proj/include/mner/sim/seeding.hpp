#pragma once

#include <cstdint>
#include <random>

namespace mner::sim {

/// SplitMix64 finalizer; a bijective avalanche mix of 64 bits.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named random streams, so that phases never share random numbers.
enum class Stream : std::uint64_t { Design = 1, PhaseA = 2, PhaseB = 3, Oracle = 4 };

/// Seed for replication `index` of `stream` under `master`. Depends only on
/// its arguments, never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(stream)) + index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Engine(derive_seed(master, stream, index));
}

}  // namespace mner::sim
