#pragma once

#include <cstdint>
#include <random>

namespace risloc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for work item `index` under `base_seed`. The base is mixed
// first so that (a, i) and (b, j) with a ^ i == b ^ j do not collide.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(splitmix64(base_seed) ^ index);
}

inline Rng make_rng(std::uint64_t base_seed, std::uint64_t index) {
  return Rng(derive_seed(base_seed, index));
}

}  // namespace risloc
