#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usual/covariance.hpp"
#include "usual/data_model.hpp"
#include "usual/transforms.hpp"

namespace usual {

// Fitted model on the standardized scale together with everything needed to
// apply it to a dataset: component layout, transforms and design.
struct ParameterEstimates {
  ComponentSpec spec;
  DesignFormula formula;
  std::vector<CovariateScaling> scaling;
  std::vector<std::string> design_columns;
  std::vector<std::string> row_names;
  std::vector<TransformSpec> transforms;  // per modeled component

  Eigen::MatrixXd beta;       // rows x design columns
  Eigen::MatrixXd sigma_u;    // rows x rows
  Eigen::MatrixXd sigma_eps;  // rows x rows
  // Posterior means of the unconstrained Sigma_eps parameters.
  PatternedCovParams eps_mean;

  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::size_t retained = 0;
  std::uint64_t seed = 0;

  std::size_t rows() const { return static_cast<std::size_t>(beta.rows()); }
};

// JSON text form.
std::string to_json(const ParameterEstimates& e);
ParameterEstimates estimates_from_json(const std::string& text);

void write_estimates(const std::string& path, const ParameterEstimates& e);
ParameterEstimates read_estimates(const std::string& path);

}  // namespace usual
