#pragma once

#include <cstdint>
#include <random>

namespace dpq {

// Seedable noise source. Every sampling operation in the library takes one of
// these explicitly; there is no hidden global randomness, so a run is fully
// reproducible from its seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // One draw from N(0, stddev^2). stddev == 0 returns 0 without consuming
  // generator state (keeps traces identical when an increment is exactly zero).
  double gaussian(double stddev);

  // Uniform on [0, 1).
  double uniform();

  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dpq
