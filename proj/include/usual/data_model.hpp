#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace usual {

// A modeled dietary component.
struct ComponentDescriptor {
  std::string name;
  std::string units;
  double lambda = 0.0;
};

struct CompositionTerm {
  std::string name;
  double coef = 1.0;
};

// A reported component that is the sum of modeled parts. The modeled
// `residual` holds output - sum(coef * part) and is what enters the model;
// after usual intakes are computed the output is rebuilt as
// residual + sum(coef * part).
//
// Example: total_grains = refined_grains + whole_grains, where
// refined_grains is the residual.
struct CompositionRule {
  std::string output;
  std::string residual;
  std::vector<CompositionTerm> parts;
};

enum class ComponentKind { episodic, daily, energy };

struct ComponentSpec {
  std::vector<ComponentDescriptor> episodic;
  std::vector<ComponentDescriptor> daily;
  ComponentDescriptor energy;
  std::vector<CompositionRule> composition;

  std::size_t J() const { return episodic.size(); }
  std::size_t K() const { return daily.size(); }
  // Number of latent rows 2J + K + 1.
  std::size_t rows() const { return 2 * J() + K() + 1; }
  // Number of modeled amount components J + K + 1.
  std::size_t components() const { return J() + K() + 1; }

  // Component c in [0, J+K+1): episodic first, then daily, then energy.
  const ComponentDescriptor& component(std::size_t c) const;
  ComponentKind kind(std::size_t c) const;
  // Latent row holding the amount of component c.
  std::size_t amount_row(std::size_t c) const;
  // Index of a modeled component by name, or npos.
  std::size_t index_of(const std::string& name) const;
  std::vector<std::string> component_names() const;

  // Columns read from the recall file: every modeled component that is not
  // a composition residual, then every composition output.
  std::vector<std::string> raw_columns() const;

  // Reported names: modeled components followed by composition outputs.
  std::vector<std::string> reported_names() const;

  // Composition rules in dependency order. Throws ValidationError on
  // unknown names, duplicate residuals, or cycles.
  std::vector<std::size_t> composition_order() const;

  void validate() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct RecallObservation {
  int recall_index = 1;
  bool weekend = false;
  // Values of the declared covariates for this recall.
  std::vector<double> covariates;
  // Reported values in ComponentSpec::raw_columns() order.
  std::vector<double> raw;
  // 2J+K+1 layout: for each episodic component an indicator and an amount,
  // then K daily amounts, then energy. Raw scale. Rows that depend on
  // composition residuals are NaN until preprocess().
  std::vector<double> responses;
};

struct Individual {
  std::string id;
  double weight = 1.0;
  std::vector<RecallObservation> recalls;
};

struct Standardization {
  double mu = 0.0;
  double sigma = 1.0;
};

struct SurveyDataset {
  ComponentSpec spec;
  std::vector<std::string> covariate_names;
  std::vector<Individual> individuals;
  bool preprocessed = false;
  // One entry per modeled component, filled by standardize().
  std::vector<Standardization> standardization;

  std::size_t recall_count() const;
  double total_weight() const;
};

// Column mapping of the long-format recall file.
struct Schema {
  std::string id = "id";
  std::string weight = "weight";
  std::string recall_index = "recall";
  std::string weekend = "weekend";
  // Declared covariate name -> column.
  std::vector<std::pair<std::string, std::string>> covariates;
  // Raw component name -> column. Unlisted components use their own name.
  std::map<std::string, std::string> responses;

  std::string response_column(const std::string& component) const;
};

SurveyDataset ingest_survey(const std::string& path, const ComponentSpec& spec,
                            const Schema& schema);

// Ingests from an already parsed table (used by ingest_survey and tests).
SurveyDataset ingest_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows,
                           const ComponentSpec& spec, const Schema& schema,
                           const std::string& source_name = "<table>");

// Decouples nested components, replaces zeros of daily components and
// energy with half the column's smallest nonzero value, and derives
// indicators. Idempotent: responses are always rebuilt from the raw values.
SurveyDataset preprocess(const SurveyDataset& raw);

// Checks the invariants the sampler relies on: indicator/amount
// consistency, strictly positive daily and energy amounts, positive weights.
void validate_for_fit(const SurveyDataset& d);

// Mean and standard deviation (n-1 denominator) of box_cox(y, lambda) over
// the positive amounts of each modeled component.
std::vector<Standardization> compute_standardization(const SurveyDataset& d);

// Copy of d with compute_standardization() stored.
SurveyDataset standardize(const SurveyDataset& d);

// Replaces every individual's weight.
SurveyDataset with_weights(const SurveyDataset& d, const Eigen::VectorXd& weights);

// Weights rescaled to mean 1.
SurveyDataset with_normalized_weights(const SurveyDataset& d);

struct CovariateDecl {
  std::string name;
  bool continuous = false;
};

// Design columns: intercept, weekend, second_recall (unless disabled), then
// one column per term. A term is a covariate name or a product "a*b" of covariates.
// Continuous covariates are standardized to mean 0, variance 1 over all
// recall rows before products are formed.
struct DesignFormula {
  std::vector<CovariateDecl> covariates;
  std::vector<std::string> terms;
  bool sequence_dummy = true;
};

struct CovariateScaling {
  std::string name;
  double center = 0.0;
  double scale = 1.0;
};

struct DesignMatrices {
  std::vector<std::string> column_names;
  std::vector<CovariateScaling> scaling;
  // Coefficients x recalls, recalls in individual-major order. Every latent
  // row uses the same design.
  Eigen::MatrixXd X;
  // Start of each individual's recalls, size n+1.
  std::vector<std::size_t> offset;
  // Usual-intake design per individual: first-recall covariates, first
  // recall, weekend flag set or cleared. Coefficients x individuals.
  Eigen::MatrixXd X_weekend;
  Eigen::MatrixXd X_weekday;

  std::size_t columns() const { return static_cast<std::size_t>(X.rows()); }
};

DesignMatrices build_design(const SurveyDataset& d, const DesignFormula& formula);

// Rebuilds the design with previously computed covariate scaling (used when
// applying fitted estimates to a dataset).
DesignMatrices build_design(const SurveyDataset& d, const DesignFormula& formula,
                            const std::vector<CovariateScaling>& scaling);

}  // namespace usual
