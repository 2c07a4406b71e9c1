#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace loadmix {

using Rng = std::mt19937_64;

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for a task identified by `path` under `root`; every random
/// stream in the pipeline is derived this way from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

} // namespace loadmix
