#pragma once

#include <cstdint>
#include <random>

namespace scatshape {

// splitmix64, used to derive independent substream seeds from a base seed
// and a set of counters (iteration, particle, step, ...). Draws made from a
// generator seeded this way do not depend on the order in which particles
// are processed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hashCombine(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ splitmix64(v));
}

// Generator for one (seed, counters...) substream.
template <typename... Counters>
std::mt19937_64 substream(std::uint64_t seed, Counters... counters) {
  std::uint64_t s = splitmix64(seed);
  ((s = hashCombine(s, static_cast<std::uint64_t>(counters))), ...);
  return std::mt19937_64(s);
}

}  // namespace scatshape
