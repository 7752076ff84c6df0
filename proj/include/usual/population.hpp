#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usual/data_model.hpp"
#include "usual/estimates.hpp"
#include "usual/hei.hpp"
#include "usual/transforms.hpp"

namespace usual {

// Usual intake of an episodic component for one individual:
//   T_day = Phi(x'b_c + u_c) * g_star(x'b_a + u_a, t, sigma_qq)
//   T     = (4 T_weekday + 3 T_weekend) / 7.
// `clamped` (optional) counts back-transform domain clamps.
double usual_intake_episodic(const Eigen::VectorXd& beta_consumption,
                             const Eigen::VectorXd& beta_amount, double u_consumption,
                             double u_amount, const TransformSpec& t, double sigma_qq,
                             const Eigen::VectorXd& x_weekend, const Eigen::VectorXd& x_weekday,
                             DomainPolicy policy = DomainPolicy::clamp,
                             std::size_t* clamped = nullptr);

// Same without the probability factor.
double usual_intake_daily(const Eigen::VectorXd& beta, double u, const TransformSpec& t,
                          double sigma_qq, const Eigen::VectorXd& x_weekend,
                          const Eigen::VectorXd& x_weekday,
                          DomainPolicy policy = DomainPolicy::clamp,
                          std::size_t* clamped = nullptr);

// Named columns of per-sample values with a weight per sample.
struct SampleTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // samples x columns
  Eigen::VectorXd weights;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  bool has(const std::string& name) const;
  // Throws ValidationError for unknown names.
  std::size_t index_of(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
  void add_column(const std::string& name, const Eigen::VectorXd& v);
};

struct UsualIntakeSamples {
  // Reported components: modeled components, then composition outputs.
  // Row i * B + b holds draw b of individual i.
  SampleTable table;
  std::vector<std::string> ids;
  std::size_t B = 0;
  std::size_t clamped = 0;
};

// B draws of U ~ Normal(0, Sigma_u) per individual, each turned into usual
// intakes of every component; composition outputs are rebuilt afterwards.
// Individual i uses its own stream, so results do not depend on threading.
UsualIntakeSamples monte_carlo_population(const ParameterEstimates& est,
                                          const SurveyDataset& d, std::size_t B,
                                          std::uint64_t seed,
                                          DomainPolicy policy = DomainPolicy::clamp,
                                          bool parallel = true);

// Lower-triangular L with L L^T = S; falls back to an eigen-decomposition
// with negative eigenvalues set to zero when S is only semidefinite.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& S);

// Reported energy: the composition output built on the modeled energy
// component if there is one, otherwise the energy component itself.
std::string reported_energy_name(const ComponentSpec& spec);

double weighted_mean(const Eigen::VectorXd& values, const Eigen::VectorXd& weights);
// sum w I{value <= x} / sum w. Throws ValidationError on empty input.
double weighted_cdf(const Eigen::VectorXd& values, const Eigen::VectorXd& weights, double x);
// Smallest sample value x with weighted_cdf(x) >= p, 0 < p < 1.
double weighted_percentile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                           double p);
std::vector<double> weighted_percentiles(const Eigen::VectorXd& values,
                                         const Eigen::VectorXd& weights,
                                         const std::vector<double>& ps);
// Weighted Pearson correlation; NaN when either side has fewer than two
// distinct values or zero variance.
double weighted_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& weights);

Eigen::MatrixXd usual_correlations(const SampleTable& t, const std::vector<std::string>& names);

// Energy-adjusted densities ("density.<name>"), scores ("score.<name>") and
// "total" for each rule. `complete` reports whether the twelve HEI-2005
// components were all present (otherwise total is a partial sum).
SampleTable score_samples(const SampleTable& intakes, const std::vector<ScoringRule>& rules,
                          const std::string& energy_name, bool* complete = nullptr);

// Correlation of each score column with total minus that column.
std::vector<double> score_rest_correlation(const SampleTable& scores,
                                           const std::vector<std::string>& score_names,
                                           const std::string& total_name = "total");

// sum w I{value <= x} I{cond} / sum w I{cond}. Throws on an empty subset.
double conditional_cdf(const Eigen::VectorXd& values, const std::vector<bool>& condition,
                       const Eigen::VectorXd& weights, double x);
double conditional_percentile(const Eigen::VectorXd& values, const std::vector<bool>& condition,
                              const Eigen::VectorXd& weights, double p);

// Weighted probability that every listed column is >= its threshold.
double joint_exceedance(const SampleTable& t, const std::vector<std::string>& names,
                        const std::vector<double>& thresholds);

struct DistributionSummary {
  std::string name;
  double mean = 0.0;
  std::vector<double> percentiles;
};

inline const std::vector<double> kReportPercentiles{0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};

DistributionSummary summarize_distribution(const SampleTable& t, const std::string& name,
                                           const std::vector<double>& ps = kReportPercentiles);

}  // namespace usual
