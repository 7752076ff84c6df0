#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usual/brr.hpp"
#include "usual/config.hpp"
#include "usual/estimates.hpp"
#include "usual/population.hpp"
#include "usual/sampler.hpp"

namespace usual {

// A numeric output table: labelled rows, named columns.
struct Report {
  std::string name;  // file stem
  std::string label_header = "statistic";
  std::vector<std::string> row_labels;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};

struct ReportSet {
  std::vector<Report> tables;

  std::vector<double> flatten() const;
  // Writes <dir>/<name>.csv for every table. With standard errors (as
  // returned by flatten() order) each value column is followed by <col>_se.
  void write(const std::string& dir, const std::vector<double>* standard_errors = nullptr) const;
};

SurveyDataset load_survey(const RunConfig& cfg, const std::string& path);

// Preprocessing (when enabled), validation, optional weight normalization
// and standardization.
SurveyDataset prepare_dataset(const RunConfig& cfg, const SurveyDataset& raw);

struct FitOutput {
  ParameterEstimates estimates;
  ChainResult chain;
  std::vector<TraceSummary> summary;
};

FitOutput fit_model(const RunConfig& cfg, const SurveyDataset& prepared, std::uint64_t seed,
                    std::ostream* diagnostics = nullptr);

UsualIntakeSamples estimate_population(const RunConfig& cfg, const ParameterEstimates& est,
                                       const SurveyDataset& prepared, std::size_t B,
                                       std::uint64_t seed);

// Mean and percentiles of every reported usual-intake component.
ReportSet usual_intake_reports(const RunConfig& cfg, const UsualIntakeSamples& samples);

// Energy-adjusted densities, HEI scores, density correlations,
// score/rest correlations, percentile curves, conditional distributions and
// joint exceedance.
ReportSet score_reports(const RunConfig& cfg, const UsualIntakeSamples& samples);

// Statistics of one complete run (fit, estimate, score) on `raw`; used for
// the full sample and each BRR replicate.
ReportSet run_full_pipeline(const RunConfig& cfg, const SurveyDataset& raw, std::uint64_t seed,
                            bool brr_settings);

void write_mcse_table(const std::string& path, const std::vector<TraceSummary>& summary);

}  // namespace usual
