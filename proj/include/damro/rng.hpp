#pragma once

#include <cstdint>
#include <random>

namespace damro {

// Seeded generator with a fully specified output stream.
//
// std::mt19937_64's sequence is fixed by the standard, but the library
// distributions are not, so uniform and Gaussian draws are derived here:
//   uniform()  = (raw >> 11) * 2^-53, in [0, 1)
//   gaussian() = Box-Muller on two uniforms, cosine branch only (no caching)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double gaussian();

 private:
  std::mt19937_64 engine_;
};

}  // namespace damro
