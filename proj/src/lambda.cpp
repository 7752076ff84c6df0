#include "usual/lambda.hpp"

#include <cmath>
#include <limits>

#include "usual/error.hpp"
#include "usual/transforms.hpp"

namespace usual {

double estimate_lambda(const std::vector<double>& values, const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  std::vector<double> y;
  for (double v : values) {
    if (v < 0.0) throw ValidationError("lambda estimation needs nonnegative values");
    if (v > 0.0) y.push_back(v);
  }
  if (y.size() < 2) throw ValidationError("lambda estimation needs at least 2 positive values");
  bool constant = true;
  for (double v : y) constant = constant && v == y.front();
  if (constant) throw ValidationError("lambda estimation needs a non-constant column");
  if (grid.size() == 1) return grid.front();

  const double n = static_cast<double>(y.size());
  double sum_log = 0.0;
  for (double v : y) sum_log += std::log(v);

  double best = grid.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double mean = 0.0;
    for (double v : y) mean += box_cox(v, lambda);
    mean /= n;
    double ss = 0.0;
    for (double v : y) {
      const double d = box_cox(v, lambda) - mean;
      ss += d * d;
    }
    const double ll = -0.5 * n * std::log(ss / n) + (lambda - 1.0) * sum_log;
    if (ll > best_ll) {
      best_ll = ll;
      best = lambda;
    }
  }
  return best;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int j = -100; j <= 100; ++j) g.push_back(j / 100.0);
  return g;
}

}  // namespace usual
