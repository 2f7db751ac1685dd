#pragma once

#include <cstdint>
#include <random>

// Reproducible stream splitting.  Every independent consumer of randomness
// (a Monte Carlo realization, a quadrature rule, a test) gets its own
// mt19937_64 seeded through splitmix64(user_seed, stream_index), so results
// are identical for a fixed (seed, index) regardless of thread scheduling.

namespace gravidec {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(derive_seed(seed, stream));
}

}  // namespace gravidec
