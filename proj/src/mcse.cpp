#include "usual/mcse.hpp"

#include <cmath>
#include <string>

#include "usual/error.hpp"

namespace usual {

BatchMeansResult batch_means(std::span<const double> draws, std::size_t batches) {
  const std::size_t n_all = draws.size();
  std::size_t a = batches;
  if (a == 0) a = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_all))));
  if (a < 2) throw ValidationError("batch means needs at least 2 batches");
  const std::size_t b = n_all / a;
  if (b < 2) {
    throw ValidationError("batch means needs batches of at least 2 draws (n = " +
                          std::to_string(n_all) + ", a = " + std::to_string(a) + ")");
  }
  BatchMeansResult out;
  out.batches = a;
  out.batch_size = b;
  out.trimmed = n_all - a * b;
  const std::size_t n = a * b;

  // Work with draws shifted by the first value; a constant sequence then
  // gives exactly zero.
  const double shift = draws[0];
  double grand = 0.0;
  for (std::size_t t = 0; t < n; ++t) grand += draws[t] - shift;
  grand /= static_cast<double>(n);

  double ss = 0.0;
  for (std::size_t j = 0; j < a; ++j) {
    double m = 0.0;
    for (std::size_t t = j * b; t < (j + 1) * b; ++t) m += draws[t] - shift;
    m /= static_cast<double>(b);
    ss += (m - grand) * (m - grand);
  }
  out.sigma2 = static_cast<double>(b) / static_cast<double>(a - 1) * ss;
  out.mcse = std::sqrt(out.sigma2 / static_cast<double>(n));
  return out;
}

double batch_means_mcse(std::span<const double> draws, std::size_t batches) {
  return batch_means(draws, batches).mcse;
}

}  // namespace usual
