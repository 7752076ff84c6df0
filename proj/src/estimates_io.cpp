#include <fstream>
#include <sstream>

#include "usual/error.hpp"
#include "usual/estimates.hpp"
#include "usual/json_io.hpp"

namespace usual {

namespace json_io {

json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": invalid JSON: " + e.what());
  }
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(what + ": rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row.at(static_cast<std::size_t>(c)).is_number()) {
        throw ValidationError(what + ": entries must be numbers");
      }
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

namespace {

json descriptor_json(const ComponentDescriptor& d) {
  return json{{"name", d.name}, {"units", d.units}, {"lambda", d.lambda}};
}

ComponentDescriptor descriptor_from(const json& j) {
  ComponentDescriptor d;
  d.name = required<std::string>(j, "name");
  d.units = optional<std::string>(j, "units", "");
  d.lambda = optional<double>(j, "lambda", 0.0);
  return d;
}

}  // namespace

json to_json(const ComponentSpec& spec) {
  json j;
  j["episodic"] = json::array();
  for (const auto& e : spec.episodic) j["episodic"].push_back(descriptor_json(e));
  j["daily"] = json::array();
  for (const auto& e : spec.daily) j["daily"].push_back(descriptor_json(e));
  j["energy"] = descriptor_json(spec.energy);
  j["composition"] = json::array();
  for (const auto& rule : spec.composition) {
    json parts = json::array();
    for (const auto& p : rule.parts) parts.push_back(json{{"name", p.name}, {"coef", p.coef}});
    j["composition"].push_back(
        json{{"output", rule.output}, {"residual", rule.residual}, {"parts", parts}});
  }
  return j;
}

ComponentSpec spec_from_json(const json& j) {
  ComponentSpec spec;
  for (const auto& e : j.value("episodic", json::array())) spec.episodic.push_back(descriptor_from(e));
  for (const auto& e : j.value("daily", json::array())) spec.daily.push_back(descriptor_from(e));
  if (!j.contains("energy")) throw SchemaError("components: missing key 'energy'");
  spec.energy = descriptor_from(j.at("energy"));
  for (const auto& r : j.value("composition", json::array())) {
    CompositionRule rule;
    rule.output = required<std::string>(r, "output");
    rule.residual = required<std::string>(r, "residual");
    for (const auto& p : r.value("parts", json::array())) {
      rule.parts.push_back({required<std::string>(p, "name"), optional<double>(p, "coef", 1.0)});
    }
    spec.composition.push_back(std::move(rule));
  }
  spec.validate();
  return spec;
}

json to_json(const DesignFormula& f) {
  json covs = json::array();
  for (const auto& c : f.covariates) covs.push_back(json{{"name", c.name}, {"continuous", c.continuous}});
  return json{{"covariates", covs}, {"terms", f.terms}, {"sequence_dummy", f.sequence_dummy}};
}

DesignFormula formula_from_json(const json& j) {
  DesignFormula f;
  for (const auto& c : j.value("covariates", json::array())) {
    f.covariates.push_back({required<std::string>(c, "name"), optional<bool>(c, "continuous", false)});
  }
  f.terms = optional<std::vector<std::string>>(j, "terms", {});
  f.sequence_dummy = optional<bool>(j, "sequence_dummy", true);
  return f;
}

json to_json(const PatternedCovParams& p) {
  return json{{"r", p.r}, {"theta", p.theta}, {"v_diag", p.v_diag}, {"v_free", p.v_free}};
}

PatternedCovParams eps_from_json(const json& j, std::size_t J, std::size_t K) {
  PatternedCovParams p = PatternedCovParams::initial(J, K);
  p.r = optional<std::vector<double>>(j, "r", p.r);
  p.theta = optional<std::vector<double>>(j, "theta", p.theta);
  p.v_diag = optional<std::vector<double>>(j, "v_diag", p.v_diag);
  p.v_free = optional<std::vector<double>>(j, "v_free", p.v_free);
  p.audit();
  return p;
}

}  // namespace json_io

using json_io::json;

std::string to_json(const ParameterEstimates& e) {
  json j;
  j["components"] = json_io::to_json(e.spec);
  j["formula"] = json_io::to_json(e.formula);
  json scaling = json::array();
  for (const auto& s : e.scaling) {
    scaling.push_back(json{{"name", s.name}, {"center", s.center}, {"scale", s.scale}});
  }
  j["covariate_scaling"] = scaling;
  j["design_columns"] = e.design_columns;
  j["rows"] = e.row_names;
  json transforms = json::array();
  for (const auto& t : e.transforms) {
    transforms.push_back(json{{"lambda", t.lambda}, {"mu", t.mu}, {"sigma", t.sigma}});
  }
  j["transforms"] = transforms;
  j["beta"] = json_io::to_json(e.beta);
  j["sigma_u"] = json_io::to_json(e.sigma_u);
  j["sigma_eps"] = json_io::to_json(e.sigma_eps);
  j["eps_parameters"] = json_io::to_json(e.eps_mean);
  j["chain"] = json{{"iterations", e.iterations},
                    {"burn_in", e.burn_in},
                    {"retained", e.retained},
                    {"seed", e.seed}};
  return j.dump(2) + "\n";
}

ParameterEstimates estimates_from_json(const std::string& text) {
  const json j = json_io::parse(text, "estimates");
  ParameterEstimates e;
  if (!j.contains("components")) throw SchemaError("estimates: missing key 'components'");
  e.spec = json_io::spec_from_json(j.at("components"));
  e.formula = json_io::formula_from_json(j.value("formula", json::object()));
  for (const auto& s : j.value("covariate_scaling", json::array())) {
    e.scaling.push_back({json_io::required<std::string>(s, "name"),
                         json_io::required<double>(s, "center"),
                         json_io::required<double>(s, "scale")});
  }
  e.design_columns = json_io::required<std::vector<std::string>>(j, "design_columns");
  e.row_names = json_io::required<std::vector<std::string>>(j, "rows");
  for (const auto& t : json_io::required<json>(j, "transforms")) {
    e.transforms.push_back({json_io::required<double>(t, "lambda"), json_io::required<double>(t, "mu"),
                            json_io::required<double>(t, "sigma")});
  }
  e.beta = json_io::matrix_from_json(json_io::required<json>(j, "beta"), "beta");
  e.sigma_u = json_io::matrix_from_json(json_io::required<json>(j, "sigma_u"), "sigma_u");
  e.sigma_eps = json_io::matrix_from_json(json_io::required<json>(j, "sigma_eps"), "sigma_eps");
  e.eps_mean = json_io::eps_from_json(j.value("eps_parameters", json::object()), e.spec.J(), e.spec.K());
  const json chain = j.value("chain", json::object());
  e.iterations = json_io::optional<std::size_t>(chain, "iterations", 0);
  e.burn_in = json_io::optional<std::size_t>(chain, "burn_in", 0);
  e.retained = json_io::optional<std::size_t>(chain, "retained", 0);
  e.seed = json_io::optional<std::uint64_t>(chain, "seed", 0);

  const Eigen::Index p = static_cast<Eigen::Index>(e.spec.rows());
  if (e.beta.rows() != p || e.sigma_u.rows() != p || e.sigma_u.cols() != p ||
      e.sigma_eps.rows() != p || e.sigma_eps.cols() != p ||
      e.transforms.size() != e.spec.components() ||
      static_cast<std::size_t>(e.beta.cols()) != e.design_columns.size()) {
    throw ValidationError("estimates: matrix dimensions do not match the components");
  }
  return e;
}

void write_estimates(const std::string& path, const ParameterEstimates& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << to_json(e);
}

ParameterEstimates read_estimates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return estimates_from_json(ss.str());
}

}  // namespace usual
