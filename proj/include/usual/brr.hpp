#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usual/data_model.hpp"

namespace usual {

// Replicate weights: one column per replicate, one row per individual.
struct BRRWeights {
  std::vector<std::string> ids;
  Eigen::MatrixXd weights;
  // Perturbation factor f; the variance divisor is R f^2.
  double factor = 0.7;

  std::size_t replicates() const { return static_cast<std::size_t>(weights.cols()); }
  void validate() const;
};

// (R f^2)^-1 sum_r (theta_r - theta)^2.
double brr_variance(double full, const std::vector<double>& replicates, double factor = 0.7);

// CSV with an id column followed by one column per replicate.
BRRWeights read_brr_weights(const std::string& path, double factor = 0.7,
                            const std::string& id_column = "id");
void write_brr_weights(const std::string& path, const BRRWeights& w);

// Fay-style replicate weights from a Sylvester-Hadamard design of order R:
// individual i is placed in stratum 1 + i mod (R - 1), skipping the all-ones
// column, and half-sample (i / (R - 1)) mod 2; replicate r multiplies its
// weight by 1 +- f. R must be a power of two.
BRRWeights fay_replicate_weights(const SurveyDataset& d, std::size_t R, double factor = 0.7);

// Dataset weights replaced by replicate r (matched by id).
SurveyDataset replicate_dataset(const SurveyDataset& d, const BRRWeights& w, std::size_t r);

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> statistics;
};

struct BRRResult {
  std::vector<double> full;
  std::vector<double> standard_error;
  // Replicates whose value entered each standard error.
  std::vector<std::size_t> used;
  std::vector<ReplicateOutcome> replicates;
  std::size_t failures = 0;
};

// Statistic vector for a dataset; `replicate` is 0 for the full sample and
// r + 1 for replicate r, so implementations can derive seeds from it.
using BRRPipeline = std::function<std::vector<double>(const SurveyDataset&, std::size_t replicate)>;

// Runs the pipeline on the full sample and on every replicate. A replicate
// that throws is flagged and left out; non-finite statistics are left out
// per statistic. Standard errors use the surviving replicates.
BRRResult run_brr(const SurveyDataset& d, const BRRWeights& w, const BRRPipeline& pipeline,
                  bool parallel = true);

}  // namespace usual
