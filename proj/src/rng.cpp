#include "dpq/rng.hpp"

#include <stdexcept>

namespace dpq {

double Rng::gaussian(double stddev) {
  if (stddev < 0.0) throw std::invalid_argument("gaussian: negative stddev");
  if (stddev == 0.0) return 0.0;
  // A fresh distribution per draw: normal_distribution caches a second
  // variate, which would make draw order depend on call history.
  std::normal_distribution<double> dist(0.0, stddev);
  return dist(gen_);
}

double Rng::uniform() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(gen_);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("below: bound must be positive");
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(gen_);
}

}  // namespace dpq
