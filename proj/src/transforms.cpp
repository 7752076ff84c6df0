#include "usual/transforms.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "usual/error.hpp"

namespace usual {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// 1 + lambda * (mu + sigma * z / sqrt(2)); the base raised to 1/lambda.
double box_cox_base(double z, const TransformSpec& t) {
  return 1.0 + t.lambda * (t.mu + t.sigma * z / kSqrt2);
}

double inverse_from_base(double base, const TransformSpec& t) {
  return std::pow(base, 1.0 / t.lambda);
}

double d2_from_base(double base, const TransformSpec& t) {
  return 0.5 * t.sigma * t.sigma * (1.0 - t.lambda) *
         std::pow(base, -2.0 + 1.0 / t.lambda);
}

}  // namespace

double box_cox(double y, double lambda) {
  if (!(y > 0.0)) throw DomainError("box_cox: y must be positive", y);
  if (lambda == 0.0) return std::log(y);
  return (std::pow(y, lambda) - 1.0) / lambda;
}

double g_tr(double y, const TransformSpec& t) {
  return kSqrt2 * (box_cox(y, t.lambda) - t.mu) / t.sigma;
}

double g_tr_inv(double z, const TransformSpec& t) {
  if (t.lambda == 0.0) return std::exp(t.mu + t.sigma * z / kSqrt2);
  const double base = box_cox_base(z, t);
  if (!(base > 0.0)) {
    throw DomainError("g_tr_inv: z = " + std::to_string(z) +
                          " outside back-transform domain",
                      z);
  }
  return inverse_from_base(base, t);
}

double d2_g_tr_inv(double z, const TransformSpec& t) {
  if (t.lambda == 0.0) return 0.5 * t.sigma * t.sigma * g_tr_inv(z, t);
  const double base = box_cox_base(z, t);
  if (!(base > 0.0)) {
    throw DomainError("d2_g_tr_inv: z = " + std::to_string(z) +
                          " outside back-transform domain",
                      z);
  }
  return d2_from_base(base, t);
}

double g_star(double v, const TransformSpec& t, double sigma_qq) {
  return g_tr_inv(v, t) + 0.5 * sigma_qq * d2_g_tr_inv(v, t);
}

double g_star_checked(double v, const TransformSpec& t, double sigma_qq,
                      DomainPolicy policy, std::size_t& clamped) {
  if (t.lambda == 0.0) return g_star(v, t, sigma_qq);
  double base = box_cox_base(v, t);
  if (!(base > 0.0)) {
    if (policy == DomainPolicy::error) {
      throw DomainError("g_star: v = " + std::to_string(v) +
                            " outside back-transform domain",
                        v);
    }
    base = kBoxCoxBaseFloor;
    ++clamped;
  }
  return inverse_from_base(base, t) + 0.5 * sigma_qq * d2_from_base(base, t);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

}  // namespace usual
