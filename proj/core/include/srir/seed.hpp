#pragma once

#include <cstdint>

namespace srir {

/// SplitMix64 finalizer; used to derive independent stream seeds from a
/// master seed and small integer keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `key` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) { return splitmix64(seed ^ splitmix64(key)); }

}  // namespace srir
