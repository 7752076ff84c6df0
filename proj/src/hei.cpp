#include "usual/hei.hpp"

#include <algorithm>

#include "usual/error.hpp"

namespace usual {

double rule_density(const ScoringRule& rule, double intake, double energy) {
  if (!(energy > 0.0)) throw ValidationError("HEI density needs positive energy");
  const double x = intake * rule.unit_scale;
  switch (rule.density) {
    case DensityKind::per_1000_kcal: return 1000.0 * x / energy;
    case DensityKind::percent_energy_fat: return 9.0 * 100.0 * x / energy;
    case DensityKind::percent_energy: return 100.0 * x / energy;
  }
  return 0.0;
}

double score_from_density(const ScoringRule& rule, double d) {
  switch (rule.map) {
    case ScoreMapKind::adequacy:
      return std::min(rule.cap, rule.cap * (d / rule.standard));
    case ScoreMapKind::saturated_fat:
      if (d >= 15.0) return 0.0;
      if (d <= 7.0) return 10.0;
      if (d > 10.0) return 8.0 - (8.0 * (d - 10.0) / 5.0);
      return 10.0 - (2.0 * (d - 7.0) / 3.0);
    case ScoreMapKind::sodium:
      if (d >= 2000.0) return 0.0;
      if (d <= 700.0) return 10.0;
      if (d >= 1100.0) return 8.0 - (8.0 * (d - 1100.0) / (2000.0 - 1100.0));
      return 10.0 - (2.0 * (d - 700.0) / (1100.0 - 700.0));
    case ScoreMapKind::sofaas:
      if (d >= 50.0) return 0.0;
      if (d <= 20.0) return 20.0;
      return 20.0 - (20.0 * (d - 20.0) / (50.0 - 20.0));
  }
  return 0.0;
}

double hei_component_score(const ScoringRule& rule, double intake, double energy) {
  return score_from_density(rule, rule_density(rule, intake, energy));
}

std::vector<ScoringRule> hei2005_rules() {
  auto adequacy = [](const std::string& name, double cap, double standard) {
    ScoringRule r;
    r.name = name;
    r.intake = name;
    r.cap = cap;
    r.standard = standard;
    return r;
  };
  std::vector<ScoringRule> rules{
      adequacy("total_fruit", 5, 0.8),     adequacy("whole_fruit", 5, 0.4),
      adequacy("total_vegetables", 5, 1.1), adequacy("dol", 5, 0.4),
      adequacy("total_grains", 5, 3),      adequacy("whole_grains", 5, 1.5),
      adequacy("milk", 10, 1.3),           adequacy("meat_beans", 10, 2.5),
      adequacy("oil", 10, 12),
  };
  ScoringRule satfat;
  satfat.name = satfat.intake = "saturated_fat";
  satfat.density = DensityKind::percent_energy_fat;
  satfat.map = ScoreMapKind::saturated_fat;
  satfat.cap = 10;
  rules.push_back(satfat);

  ScoringRule sodium;
  sodium.name = sodium.intake = "sodium";
  sodium.map = ScoreMapKind::sodium;
  sodium.cap = 10;
  rules.push_back(sodium);

  ScoringRule sofaas;
  sofaas.name = sofaas.intake = "sofaas";
  sofaas.density = DensityKind::percent_energy;
  sofaas.map = ScoreMapKind::sofaas;
  sofaas.cap = 20;
  rules.push_back(sofaas);
  return rules;
}

std::vector<std::string> hei2005_component_names() {
  std::vector<std::string> names;
  for (const auto& r : hei2005_rules()) names.push_back(r.name);
  return names;
}

double hei_total_score(const std::map<std::string, double>& scores) {
  double total = 0.0;
  for (const auto& name : hei2005_component_names()) {
    const auto it = scores.find(name);
    if (it == scores.end()) throw ValidationError("HEI total needs component '" + name + "'");
    total += it->second;
  }
  return total;
}

}  // namespace usual
