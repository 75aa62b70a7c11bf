#pragma once

#include <cstdint>
#include <random>

#include "dynrisk/normal.hpp"

namespace dynrisk {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent random stream number `stream` derived from a run seed.
///
/// The engine is mt19937_64 seeded with splitmix64(splitmix64(seed) ^ stream').
/// Normals come from inversion (norm_quantile of a 53-bit uniform in (0, 1)),
/// so a stream is bit-reproducible and does not depend on the standard
/// library's distribution implementations.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform()); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dynrisk
