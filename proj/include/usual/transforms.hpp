#pragma once

#include <cstddef>

namespace usual {

// Box-Cox parameter together with the standardization constants of the
// transformed, nonzero amounts.
struct TransformSpec {
  double lambda = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
};

// Box-Cox transform; log(y) when lambda == 0. Requires y > 0.
double box_cox(double y, double lambda);

// sqrt(2) * (box_cox(y) - mu) / sigma.
double g_tr(double y, const TransformSpec& t);

// Inverse of g_tr. Throws DomainError when 1 + lambda * (mu + sigma*z/sqrt(2))
// is not positive.
double g_tr_inv(double z, const TransformSpec& t);

// Second derivative of g_tr_inv with respect to z.
double d2_g_tr_inv(double z, const TransformSpec& t);

// Bias-corrected back-transform:
//   g_tr_inv(v) + 0.5 * sigma_qq * d2_g_tr_inv(v).
double g_star(double v, const TransformSpec& t, double sigma_qq);

// What to do when a simulated latent value falls outside the domain of the
// back-transform.
enum class DomainPolicy { clamp, error };

// Smallest Box-Cox base used by DomainPolicy::clamp.
inline constexpr double kBoxCoxBaseFloor = 1e-8;

// g_star with the domain policy applied. Under clamp, the Box-Cox base is
// floored at kBoxCoxBaseFloor and `clamped` is incremented.
double g_star_checked(double v, const TransformSpec& t, double sigma_qq,
                      DomainPolicy policy, std::size_t& clamped);

// Standard normal distribution function.
double normal_cdf(double x);

}  // namespace usual
