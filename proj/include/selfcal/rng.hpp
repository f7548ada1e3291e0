#pragma once

#include <cstdint>
#include <random>

namespace selfcal {

// splitmix64 finalizer, used to decorrelate seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream from a master seed and one or two indices.
// Used so per-particle results do not depend on evaluation order or
// worker-thread count.
inline std::uint64_t substream(std::uint64_t master, std::uint64_t a,
                               std::uint64_t b = 0) {
  return mix64(mix64(master ^ mix64(a)) ^ mix64(b ^ 0x5851f42d4c957f2dULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(substream(master, a, b));
}

}  // namespace selfcal
