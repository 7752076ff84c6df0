#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "usual/covariance.hpp"
#include "usual/csv.hpp"
#include "usual/data_model.hpp"
#include "usual/estimates.hpp"

namespace usual {

// Generative parameters for simulated surveys. The design has the columns
// intercept, weekend, second_recall; beta is rows x 3 on the scale given by
// `standardization`.
struct SyntheticTruth {
  ComponentSpec spec;
  std::vector<Standardization> standardization;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd sigma_u;
  PatternedCovParams eps;
  std::size_t individuals = 400;
  std::size_t recalls = 2;
  double weekend_probability = 3.0 / 7.0;
  // Weights are drawn uniformly on [weight_lo, weight_hi].
  double weight_lo = 1.0;
  double weight_hi = 1.0;

  void validate() const;
  std::vector<TransformSpec> transforms() const;

  // Two episodic components, one daily component and energy.
  static SyntheticTruth reference(std::size_t individuals = 400);
};

// Simulated long-format recall table (id, weight, recall, weekend and the
// raw component columns). `resampled` counts error vectors that were redrawn
// because the back-transform was undefined.
csv::Table synthetic_table(const SyntheticTruth& truth, std::uint64_t seed,
                           std::size_t* resampled = nullptr);

// synthetic_table() ingested with the default schema.
SurveyDataset generate_synthetic(const SyntheticTruth& truth, std::uint64_t seed,
                                 std::size_t* resampled = nullptr);

DesignFormula synthetic_formula();

struct ScaledTruth {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd sigma_u;
  Eigen::MatrixXd sigma_eps;
};

// Truth expressed on another standardization of the amount rows (e.g. the
// one computed from a simulated sample). Amount row z maps to a z + b with
// a = sigma_t / sigma_f and b = sqrt(2) (mu_t - mu_f) / sigma_f; the
// intercept absorbs b.
ScaledTruth truth_on_scale(const SyntheticTruth& truth, const std::vector<Standardization>& to);

// The truth packaged as parameter estimates on its own scale.
ParameterEstimates truth_estimates(const SyntheticTruth& truth);

}  // namespace usual
