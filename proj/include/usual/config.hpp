#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "usual/data_model.hpp"
#include "usual/hei.hpp"
#include "usual/sampler.hpp"
#include "usual/synthetic.hpp"
#include "usual/transforms.hpp"

namespace usual {

struct PopulationConfig {
  std::size_t b_draws = 5000;
  DomainPolicy policy = DomainPolicy::clamp;
  std::vector<double> percentiles = {0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};
};

// Distribution of `target` among samples where `given` `op` `value` holds.
// The value may instead be "median" of the given statistic.
struct ConditionalSpec {
  std::string name;
  std::string target;
  std::string given;
  std::string op = ">";  // one of > >= < <=
  std::optional<double> value;
  bool value_is_median = false;
};

struct ScoringConfig {
  std::vector<ScoringRule> rules;
  // Reported energy column; empty picks reported_energy_name().
  std::string energy;
  std::vector<ConditionalSpec> conditional;
  // Thresholds for the joint exceedance table; empty uses each score's
  // median.
  std::vector<double> joint_thresholds;
};

struct BRRConfig {
  std::string weights;  // path, empty when not configured
  double factor = 0.7;
  std::size_t replicates = 0;  // use the first R columns; 0 uses all
  std::size_t iterations = 0;  // 0 keeps the main chain settings
  std::size_t burn_in = 0;
  std::size_t b_draws = 0;
  std::size_t simulate_replicates = 32;  // replicate sets written by `simulate`
};

struct RunConfig {
  std::string base_dir;  // directory of the config file; relative paths resolve here
  ComponentSpec spec;
  Schema schema;
  DesignFormula formula;
  std::string data;
  bool preprocess = true;
  bool normalize_weights = true;
  bool parallel = true;
  Priors priors;
  ChainConfig chain;
  PopulationConfig population;
  ScoringConfig scoring;
  BRRConfig brr;
  std::optional<SyntheticTruth> synthetic;
  std::uint64_t seed = 1;

  std::string resolve(const std::string& path) const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& base_dir,
                       const std::string& source = "<config>");

// Scoring rule by HEI-2005 component name (total_fruit, ..., sofaas).
ScoringRule hei2005_rule(const std::string& name);

}  // namespace usual
