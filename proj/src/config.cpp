#include "usual/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "usual/csv.hpp"
#include "usual/error.hpp"
#include "usual/json_io.hpp"

namespace usual {

using json_io::json;
using json_io::optional;
using json_io::required;

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ScoringRule hei2005_rule(const std::string& name) {
  for (const auto& r : hei2005_rules()) {
    if (r.name == name) return r;
  }
  throw ValidationError("unknown HEI-2005 component '" + name + "'");
}

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }
}

DensityKind density_from(const std::string& s) {
  if (s == "per_1000_kcal") return DensityKind::per_1000_kcal;
  if (s == "percent_energy_fat") return DensityKind::percent_energy_fat;
  if (s == "percent_energy") return DensityKind::percent_energy;
  throw ValidationError("unknown density kind '" + s + "'");
}

ScoreMapKind map_from(const std::string& s) {
  if (s == "adequacy") return ScoreMapKind::adequacy;
  if (s == "saturated_fat") return ScoreMapKind::saturated_fat;
  if (s == "sodium") return ScoreMapKind::sodium;
  if (s == "sofaas") return ScoreMapKind::sofaas;
  throw ValidationError("unknown score map '" + s + "'");
}

ScoringRule rule_from(const json& j) {
  check_keys(j, {"hei2005", "name", "intake", "density", "map", "cap", "standard", "unit_scale"},
             "scoring rule");
  ScoringRule r;
  if (j.contains("hei2005")) r = hei2005_rule(required<std::string>(j, "hei2005"));
  r.name = optional<std::string>(j, "name", r.name);
  r.intake = optional<std::string>(j, "intake", r.intake.empty() ? r.name : r.intake);
  if (j.contains("density")) r.density = density_from(required<std::string>(j, "density"));
  if (j.contains("map")) r.map = map_from(required<std::string>(j, "map"));
  r.cap = optional<double>(j, "cap", r.cap);
  r.standard = optional<double>(j, "standard", r.standard);
  r.unit_scale = optional<double>(j, "unit_scale", r.unit_scale);
  if (r.name.empty()) throw ValidationError("scoring rule needs a name");
  if (r.intake.empty()) r.intake = r.name;
  if (!(r.cap > 0.0) || !(r.standard > 0.0)) {
    throw ValidationError("scoring rule '" + r.name + "': cap and standard must be positive");
  }
  return r;
}

ConditionalSpec conditional_from(const json& j) {
  check_keys(j, {"name", "target", "given", "op", "value"}, "conditional");
  ConditionalSpec c;
  c.target = required<std::string>(j, "target");
  c.given = optional<std::string>(j, "given", c.target);
  c.op = optional<std::string>(j, "op", ">");
  if (c.op != ">" && c.op != ">=" && c.op != "<" && c.op != "<=") {
    throw ValidationError("conditional: op must be one of > >= < <=");
  }
  if (!j.contains("value")) throw SchemaError("conditional: missing key 'value'");
  const json& v = j.at("value");
  if (v.is_string()) {
    if (v.get<std::string>() != "median") {
      throw ValidationError("conditional: value must be a number or \"median\"");
    }
    c.value_is_median = true;
  } else if (v.is_number()) {
    c.value = v.get<double>();
  } else {
    throw ValidationError("conditional: value must be a number or \"median\"");
  }
  c.name = optional<std::string>(j, "name", c.target + "|" + c.given + c.op + (c.value_is_median ? std::string("median") : csv::format(*c.value)));
  return c;
}

SyntheticTruth synthetic_from(const json& j, const std::optional<ComponentSpec>& spec) {
  check_keys(j,
             {"reference", "individuals", "recalls", "weekend_probability", "weights",
              "standardization", "beta", "sigma_u", "eps"},
             "synthetic");
  const std::size_t n = optional<std::size_t>(j, "individuals", 400);
  SyntheticTruth t;
  if (optional<bool>(j, "reference", false)) {
    t = SyntheticTruth::reference(n);
    if (spec) t.spec = *spec;
  } else {
    if (!spec) throw SchemaError("synthetic: a non-reference truth needs 'components'");
    t.spec = *spec;
    t.individuals = n;
    for (const char* key : {"standardization", "beta", "sigma_u", "eps"}) {
      if (!j.contains(key)) throw SchemaError(std::string("synthetic: missing key '") + key + "'");
    }
  }
  t.recalls = optional<std::size_t>(j, "recalls", t.recalls);
  t.weekend_probability = optional<double>(j, "weekend_probability", t.weekend_probability);
  if (j.contains("weights")) {
    const auto w = required<std::vector<double>>(j, "weights");
    if (w.size() != 2) throw ValidationError("synthetic: weights must be [lo, hi]");
    t.weight_lo = w[0];
    t.weight_hi = w[1];
  }
  if (j.contains("standardization")) {
    t.standardization.clear();
    for (const auto& s : j.at("standardization")) {
      const auto pair = s.get<std::vector<double>>();
      if (pair.size() != 2) throw ValidationError("synthetic: standardization entries are [mu, sigma]");
      t.standardization.push_back({pair[0], pair[1]});
    }
  }
  if (j.contains("beta")) t.beta = json_io::matrix_from_json(j.at("beta"), "synthetic beta");
  if (j.contains("sigma_u")) t.sigma_u = json_io::matrix_from_json(j.at("sigma_u"), "synthetic sigma_u");
  if (j.contains("eps")) t.eps = json_io::eps_from_json(j.at("eps"), t.spec.J(), t.spec.K());
  t.validate();
  return t;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir,
                       const std::string& source) {
  const json j = json_io::parse(text, source);
  check_keys(j,
             {"seed", "components", "covariates", "terms", "sequence_dummy", "schema", "data", "preprocess",
              "normalize_weights", "parallel", "priors", "chain", "population", "scoring", "brr",
              "synthetic"},
             source);
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.seed = optional<std::uint64_t>(j, "seed", cfg.seed);

  std::optional<ComponentSpec> spec;
  if (j.contains("components")) spec = json_io::spec_from_json(j.at("components"));
  if (j.contains("synthetic")) {
    cfg.synthetic = synthetic_from(j.at("synthetic"), spec);
    cfg.spec = cfg.synthetic->spec;
  } else if (spec) {
    cfg.spec = *spec;
  } else {
    throw SchemaError(source + ": missing key 'components'");
  }

  for (const auto& c : j.value("covariates", json::array())) {
    check_keys(c, {"name", "column", "continuous"}, "covariate");
    const auto name = required<std::string>(c, "name");
    cfg.schema.covariates.emplace_back(name, optional<std::string>(c, "column", name));
    cfg.formula.covariates.push_back({name, optional<bool>(c, "continuous", false)});
  }
  cfg.formula.terms = optional<std::vector<std::string>>(j, "terms", {});
  cfg.formula.sequence_dummy = optional<bool>(j, "sequence_dummy", true);

  if (j.contains("schema")) {
    const json& s = j.at("schema");
    check_keys(s, {"id", "weight", "recall", "weekend", "responses"}, "schema");
    cfg.schema.id = optional<std::string>(s, "id", cfg.schema.id);
    cfg.schema.weight = optional<std::string>(s, "weight", cfg.schema.weight);
    cfg.schema.recall_index = optional<std::string>(s, "recall", cfg.schema.recall_index);
    cfg.schema.weekend = optional<std::string>(s, "weekend", cfg.schema.weekend);
    cfg.schema.responses =
        optional<std::map<std::string, std::string>>(s, "responses", cfg.schema.responses);
  }
  cfg.data = optional<std::string>(j, "data", "");
  cfg.preprocess = optional<bool>(j, "preprocess", cfg.preprocess);
  cfg.normalize_weights = optional<bool>(j, "normalize_weights", cfg.normalize_weights);
  cfg.parallel = optional<bool>(j, "parallel", cfg.parallel);

  if (j.contains("priors")) {
    const json& p = j.at("priors");
    check_keys(p, {"beta_variance", "sigma_u_correlation", "sigma_u_dof"}, "priors");
    cfg.priors.beta_variance = optional<double>(p, "beta_variance", cfg.priors.beta_variance);
    cfg.priors.sigma_u_correlation =
        optional<double>(p, "sigma_u_correlation", cfg.priors.sigma_u_correlation);
    cfg.priors.sigma_u_dof = optional<double>(p, "sigma_u_dof", cfg.priors.sigma_u_dof);
  }

  if (j.contains("chain")) {
    const json& c = j.at("chain");
    check_keys(c,
               {"iterations", "burn_in", "thin", "grid_points", "v_window", "batch_count",
                "diagnostics_every", "retain_draws"},
               "chain");
    ChainConfig& ch = cfg.chain;
    ch.iterations = optional<std::size_t>(c, "iterations", ch.iterations);
    ch.burn_in = optional<std::size_t>(c, "burn_in", ch.burn_in);
    ch.thin = optional<std::size_t>(c, "thin", ch.thin);
    ch.grid_points = optional<int>(c, "grid_points", ch.grid_points);
    ch.v_window = optional<double>(c, "v_window", ch.v_window);
    ch.batch_count = optional<std::size_t>(c, "batch_count", ch.batch_count);
    ch.diagnostics_every = optional<std::size_t>(c, "diagnostics_every", ch.diagnostics_every);
    ch.retain_draws = optional<bool>(c, "retain_draws", ch.retain_draws);
  }
  cfg.chain.parallel = cfg.parallel;

  if (j.contains("population")) {
    const json& p = j.at("population");
    check_keys(p, {"b_draws", "domain_policy", "percentiles"}, "population");
    cfg.population.b_draws = optional<std::size_t>(p, "b_draws", cfg.population.b_draws);
    const auto policy = optional<std::string>(p, "domain_policy", "clamp");
    if (policy == "clamp") {
      cfg.population.policy = DomainPolicy::clamp;
    } else if (policy == "error") {
      cfg.population.policy = DomainPolicy::error;
    } else {
      throw ValidationError("population: domain_policy must be \"clamp\" or \"error\"");
    }
    cfg.population.percentiles =
        optional<std::vector<double>>(p, "percentiles", cfg.population.percentiles);
  }

  if (j.contains("scoring")) {
    const json& s = j.at("scoring");
    check_keys(s, {"energy", "rules", "conditional", "joint_thresholds"}, "scoring");
    cfg.scoring.energy = optional<std::string>(s, "energy", "");
    for (const auto& r : s.value("rules", json::array())) cfg.scoring.rules.push_back(rule_from(r));
    for (const auto& c : s.value("conditional", json::array())) {
      cfg.scoring.conditional.push_back(conditional_from(c));
    }
    cfg.scoring.joint_thresholds = optional<std::vector<double>>(s, "joint_thresholds", {});
    if (!cfg.scoring.joint_thresholds.empty() &&
        cfg.scoring.joint_thresholds.size() != cfg.scoring.rules.size()) {
      throw ValidationError("scoring: joint_thresholds needs one value per rule");
    }
  }

  if (j.contains("brr")) {
    const json& b = j.at("brr");
    check_keys(b,
               {"weights", "factor", "replicates", "iterations", "burn_in", "b_draws",
                "simulate_replicates"},
               "brr");
    cfg.brr.weights = optional<std::string>(b, "weights", "");
    cfg.brr.factor = optional<double>(b, "factor", cfg.brr.factor);
    cfg.brr.replicates = optional<std::size_t>(b, "replicates", cfg.brr.replicates);
    cfg.brr.iterations = optional<std::size_t>(b, "iterations", cfg.brr.iterations);
    cfg.brr.burn_in = optional<std::size_t>(b, "burn_in", cfg.brr.burn_in);
    cfg.brr.b_draws = optional<std::size_t>(b, "b_draws", cfg.brr.b_draws);
    cfg.brr.simulate_replicates =
        optional<std::size_t>(b, "simulate_replicates", cfg.brr.simulate_replicates);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(ss.str(), dir, path);
}

}  // namespace usual
