#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "frodo/vec.hpp"

namespace frodo {

// Normalized power-law memory weights: weight(n) = n^(lambda-1) for
// n = 1..horizon. The raw kernel carries a 1/Gamma(lambda) factor and is
// normalized by its maximum, attained at n = 1; both cancel, so neither is
// evaluated here. Weights are precomputed once and the kernel is immutable.
class MemoryKernel {
 public:
  MemoryKernel(double lambda, int horizon)
      : lambda_(lambda), horizon_(horizon) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw std::invalid_argument("lambda must lie in the open interval (0,1)");
    }
    if (horizon < 1) {
      throw std::invalid_argument("horizon must be a positive integer");
    }
    weights_.reserve(static_cast<std::size_t>(horizon));
    for (int n = 1; n <= horizon; ++n) {
      weights_.push_back(std::pow(static_cast<double>(n), lambda - 1.0));
    }
  }

  double lambda() const { return lambda_; }
  int horizon() const { return horizon_; }

  // Weight of the gradient n rounds in the past, n in [1, horizon].
  double weight(int n) const {
    return weights_.at(static_cast<std::size_t>(n - 1));
  }
  const std::vector<double>& weights() const { return weights_; }

 private:
  double lambda_;
  int horizon_;
  std::vector<double> weights_;
};

// Weighted sum of past gradients, newest first:
//   sum_{n=1..min(|history|, horizon)} weight(n) * history[n-1].
// An empty history yields the zero vector of the requested dimension;
// shorter-than-horizon histories are summed as-is (missing rounds are zero).
inline Vec memory_term(const MemoryKernel& kernel,
                       const std::deque<Vec>& history, std::size_t dimension) {
  Vec acc = zeros(dimension);
  const std::size_t used =
      std::min(history.size(), static_cast<std::size_t>(kernel.horizon()));
  for (std::size_t n = 0; n < used; ++n) {
    axpy(acc, kernel.weights()[n], history[n]);
  }
  return acc;
}

}  // namespace frodo
