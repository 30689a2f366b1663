#pragma once

#include <cstdint>

namespace kinrescale {

// Stateless splitmix64 mix; seeded per lattice site so initial data are
// reproducible for any traversal order or thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Upper 53 bits to a double in [0, 1).
inline double u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace kinrescale
