#pragma once

#include <cstdint>
#include <random>

namespace specrl {

// ============================================================================
//  Seed derivation
//
//  All stochastic components draw from std::mt19937_64 engines whose seeds
//  are derived from a single user seed and a stream index (episode number,
//  trajectory number, net-init tag, ...).  Results are therefore identical
//  for any worker count: parallel workers own disjoint streams.
// ============================================================================

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream identified by (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream ^ 0x9e3779b97f4a7c15ULL));
}

using Rng = std::mt19937_64;

inline Rng make_stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace specrl
