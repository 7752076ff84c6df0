#pragma once

#include <map>
#include <string>
#include <vector>

namespace usual {

enum class DensityKind {
  per_1000_kcal,       // 1000 * intake / energy
  percent_energy_fat,  // 9 * 100 * grams / energy
  percent_energy,      // 100 * intake / energy (intake already in kcal)
};

enum class ScoreMapKind {
  adequacy,  // min(cap, cap * density / standard)
  saturated_fat,
  sodium,
  sofaas,
};

// Scoring of one HEI-2005 component from usual intakes.
struct ScoringRule {
  std::string name;    // HEI component name
  std::string intake;  // reported usual-intake component used as numerator
  DensityKind density = DensityKind::per_1000_kcal;
  ScoreMapKind map = ScoreMapKind::adequacy;
  double cap = 5.0;
  double standard = 1.0;    // adequacy maps only
  double unit_scale = 1.0;  // intake multiplier applied before the density
};

double rule_density(const ScoringRule& rule, double intake, double energy);
double score_from_density(const ScoringRule& rule, double density);
// Requires energy > 0.
double hei_component_score(const ScoringRule& rule, double intake, double energy);

// The twelve HEI-2005 components, with intake names equal to the component
// names. Sodium is scored in mg per 1000 kcal.
std::vector<ScoringRule> hei2005_rules();
std::vector<std::string> hei2005_component_names();

// Sum of the twelve component scores; throws ValidationError when any is
// missing.
double hei_total_score(const std::map<std::string, double>& scores);

}  // namespace usual
