#pragma once

#include <cstddef>
#include <span>

namespace usual {

struct BatchMeansResult {
  double mcse = 0.0;
  double sigma2 = 0.0;      // batch-means estimate of the asymptotic variance
  std::size_t batches = 0;  // a
  std::size_t batch_size = 0;
  std::size_t trimmed = 0;  // draws dropped from the tail so that a divides n
};

// Batch-means Monte Carlo standard error of the mean of `draws`:
//   sigma2 = b / (a - 1) * sum_j (batch_mean_j - grand_mean)^2,
//   mcse   = sqrt(sigma2 / n).
// batches == 0 uses floor(sqrt(n)). When a does not divide n the tail is
// trimmed (reported in `trimmed`). Requires a >= 2 and b >= 2.
BatchMeansResult batch_means(std::span<const double> draws, std::size_t batches);

double batch_means_mcse(std::span<const double> draws, std::size_t batches);

}  // namespace usual
