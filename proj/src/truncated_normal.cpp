#include "usual/truncated_normal.hpp"

#include <cmath>

namespace usual {

double truncated_standard_normal_above(RngStream& rng, double c) {
  if (c <= 0.0) {
    while (true) {
      const double z = rng.normal();
      if (z > c) return z;
    }
  }
  const double alpha = 0.5 * (c + std::sqrt(c * c + 4.0));
  while (true) {
    const double z = c - std::log1p(-rng.uniform()) / alpha;
    const double accept = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (rng.uniform() < accept) return z;
  }
}

double truncated_normal_positive(RngStream& rng, double mu, double sigma) {
  while (true) {
    const double w = mu + sigma * truncated_standard_normal_above(rng, -mu / sigma);
    if (w > 0.0) return w;
  }
}

double truncated_normal_negative(RngStream& rng, double mu, double sigma) {
  while (true) {
    const double w = mu - sigma * truncated_standard_normal_above(rng, mu / sigma);
    if (w < 0.0) return w;
  }
}

}  // namespace usual
