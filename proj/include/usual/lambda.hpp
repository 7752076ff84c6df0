#pragma once

#include <vector>

namespace usual {

// Box-Cox parameter on `grid` maximizing the Gaussian profile
// log-likelihood of the positive entries of `values`:
//   -n/2 log(sigma2_hat(lambda)) + (lambda - 1) sum log y.
// Zeros are ignored; negative values, fewer than two positive values or a
// constant column are ValidationErrors.
double estimate_lambda(const std::vector<double>& values, const std::vector<double>& grid);

// -1 .. 1 in steps of 0.01.
std::vector<double> default_lambda_grid();

}  // namespace usual
