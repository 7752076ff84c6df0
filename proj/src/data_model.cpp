#include "usual/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "usual/csv.hpp"
#include "usual/error.hpp"
#include "usual/transforms.hpp"

namespace usual {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Decoupled values this close below zero are rounding noise and become 0.
constexpr double kResidualTolerance = 1e-9;

}  // namespace

// --- ComponentSpec --------------------------------------------------------

const ComponentDescriptor& ComponentSpec::component(std::size_t c) const {
  if (c < J()) return episodic[c];
  if (c < J() + K()) return daily[c - J()];
  return energy;
}

ComponentKind ComponentSpec::kind(std::size_t c) const {
  if (c < J()) return ComponentKind::episodic;
  if (c < J() + K()) return ComponentKind::daily;
  return ComponentKind::energy;
}

std::size_t ComponentSpec::amount_row(std::size_t c) const {
  if (c < J()) return 2 * c + 1;
  return 2 * J() + (c - J());
}

std::size_t ComponentSpec::index_of(const std::string& name) const {
  for (std::size_t c = 0; c < components(); ++c) {
    if (component(c).name == name) return c;
  }
  return npos;
}

std::vector<std::string> ComponentSpec::component_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < components(); ++c) names.push_back(component(c).name);
  return names;
}

std::vector<std::string> ComponentSpec::raw_columns() const {
  std::set<std::string> residuals;
  for (const auto& rule : composition) residuals.insert(rule.residual);
  std::vector<std::string> cols;
  for (std::size_t c = 0; c < components(); ++c) {
    if (!residuals.count(component(c).name)) cols.push_back(component(c).name);
  }
  for (const auto& rule : composition) cols.push_back(rule.output);
  return cols;
}

std::vector<std::string> ComponentSpec::reported_names() const {
  auto names = component_names();
  for (const auto& rule : composition) names.push_back(rule.output);
  return names;
}

std::vector<std::size_t> ComponentSpec::composition_order() const {
  const std::size_t n = composition.size();
  std::unordered_map<std::string, std::size_t> by_output, by_residual;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rule = composition[i];
    if (index_of(rule.residual) == npos) {
      throw ValidationError("composition '" + rule.output + "': residual '" + rule.residual +
                            "' is not a modeled component");
    }
    if (index_of(rule.output) != npos) {
      throw ValidationError("composition output '" + rule.output +
                            "' must not also be a modeled component");
    }
    if (!by_output.emplace(rule.output, i).second) {
      throw ValidationError("composition output '" + rule.output + "' defined twice");
    }
    if (!by_residual.emplace(rule.residual, i).second) {
      throw ValidationError("component '" + rule.residual + "' is the residual of two rules");
    }
  }
  std::vector<std::vector<std::size_t>> deps(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& part : composition[i].parts) {
      if (part.name == composition[i].residual || part.name == composition[i].output) {
        throw ValidationError("composition '" + composition[i].output +
                              "' references itself");
      }
      if (auto it = by_output.find(part.name); it != by_output.end()) {
        deps[i].push_back(it->second);
      } else if (auto jt = by_residual.find(part.name); jt != by_residual.end()) {
        deps[i].push_back(jt->second);
      } else if (index_of(part.name) == npos) {
        throw ValidationError("composition '" + composition[i].output + "': unknown part '" +
                              part.name + "'");
      }
    }
  }
  std::vector<int> mark(n, 0);  // 0 new, 1 in progress, 2 done
  std::vector<std::size_t> order;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (mark[i] == 2) return;
    if (mark[i] == 1) {
      throw ValidationError("composition map is cyclic at '" + composition[i].output + "'");
    }
    mark[i] = 1;
    for (auto d : deps[i]) visit(d);
    mark[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < n; ++i) visit(i);
  return order;
}

void ComponentSpec::validate() const {
  if (episodic.empty()) throw ValidationError("at least one episodic component is required");
  std::set<std::string> names;
  for (std::size_t c = 0; c < components(); ++c) {
    const auto& d = component(c);
    if (d.name.empty()) throw ValidationError("component with empty name");
    if (!names.insert(d.name).second) {
      throw ValidationError("duplicate component name '" + d.name + "'");
    }
    if (!std::isfinite(d.lambda)) {
      throw ValidationError("component '" + d.name + "' has non-finite lambda");
    }
  }
  composition_order();
}

// --- SurveyDataset --------------------------------------------------------

std::size_t SurveyDataset::recall_count() const {
  std::size_t n = 0;
  for (const auto& ind : individuals) n += ind.recalls.size();
  return n;
}

double SurveyDataset::total_weight() const {
  double w = 0.0;
  for (const auto& ind : individuals) w += ind.weight;
  return w;
}

std::string Schema::response_column(const std::string& component) const {
  auto it = responses.find(component);
  return it == responses.end() ? component : it->second;
}

// --- ingestion ------------------------------------------------------------

namespace {

// Raw-column index for each modeled component, npos for residuals.
std::vector<std::size_t> modeled_raw_index(const ComponentSpec& spec) {
  const auto cols = spec.raw_columns();
  std::vector<std::size_t> idx(spec.components(), ComponentSpec::npos);
  for (std::size_t c = 0; c < spec.components(); ++c) {
    auto it = std::find(cols.begin(), cols.end(), spec.component(c).name);
    if (it != cols.end()) idx[c] = static_cast<std::size_t>(it - cols.begin());
  }
  return idx;
}

void fill_direct_responses(const ComponentSpec& spec, RecallObservation& rec) {
  const auto idx = modeled_raw_index(spec);
  rec.responses.assign(spec.rows(), kNaN);
  for (std::size_t c = 0; c < spec.components(); ++c) {
    if (idx[c] == ComponentSpec::npos) continue;
    const double amount = rec.raw[idx[c]];
    const std::size_t row = spec.amount_row(c);
    rec.responses[row] = amount;
    if (c < spec.J()) rec.responses[row - 1] = amount > 0.0 ? 1.0 : 0.0;
  }
}

}  // namespace

SurveyDataset ingest_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows,
                           const ComponentSpec& spec, const Schema& schema,
                           const std::string& source_name) {
  spec.validate();
  csv::Table table{header, rows};
  const std::size_t id_col = table.column(schema.id);
  const std::size_t weight_col = table.column(schema.weight);
  const std::size_t recall_col = table.column(schema.recall_index);
  const std::size_t weekend_col = table.column(schema.weekend);
  std::vector<std::size_t> cov_cols;
  for (const auto& [name, col] : schema.covariates) cov_cols.push_back(table.column(col));
  const auto raw_names = spec.raw_columns();
  std::vector<std::size_t> raw_cols;
  for (const auto& name : raw_names) raw_cols.push_back(table.column(schema.response_column(name)));

  SurveyDataset d;
  d.spec = spec;
  for (const auto& [name, col] : schema.covariates) d.covariate_names.push_back(name);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = source_name + " row " + std::to_string(r + 2);
    const std::string& id = row[id_col];
    const double weight = csv::to_double(row[weight_col], where + " weight");
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw ValidationError(where + ": weight must be positive");
    }
    RecallObservation rec;
    const double recall = csv::to_double(row[recall_col], where + " recall");
    if (recall < 1 || recall != std::floor(recall)) {
      throw ValidationError(where + ": recall index must be a positive integer");
    }
    rec.recall_index = static_cast<int>(recall);
    const double weekend = csv::to_double(row[weekend_col], where + " weekend");
    if (weekend != 0.0 && weekend != 1.0) {
      throw ValidationError(where + ": weekend flag must be 0 or 1");
    }
    rec.weekend = weekend == 1.0;
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      rec.covariates.push_back(csv::to_double(row[cov_cols[k]], where + " covariate"));
    }
    for (std::size_t k = 0; k < raw_cols.size(); ++k) {
      const double v = csv::to_double(row[raw_cols[k]], where + " " + raw_names[k]);
      if (!std::isfinite(v)) throw ValidationError(where + ": non-finite " + raw_names[k]);
      if (v < 0.0) throw ValidationError(where + ": negative amount for " + raw_names[k]);
      rec.raw.push_back(v);
    }
    fill_direct_responses(spec, rec);

    auto [it, inserted] = index.emplace(id, d.individuals.size());
    if (inserted) {
      d.individuals.push_back(Individual{id, weight, {}});
    } else if (d.individuals[it->second].weight != weight) {
      throw ValidationError(where + ": weight differs between recalls of id '" + id + "'");
    }
    auto& recalls = d.individuals[it->second].recalls;
    for (const auto& existing : recalls) {
      if (existing.recall_index == rec.recall_index) {
        throw ValidationError(where + ": duplicate recall " + std::to_string(rec.recall_index) +
                              " for id '" + id + "'");
      }
    }
    recalls.push_back(std::move(rec));
  }
  for (auto& ind : d.individuals) {
    std::sort(ind.recalls.begin(), ind.recalls.end(),
              [](const auto& a, const auto& b) { return a.recall_index < b.recall_index; });
  }
  return d;
}

SurveyDataset ingest_survey(const std::string& path, const ComponentSpec& spec,
                            const Schema& schema) {
  const auto table = csv::read(path);
  return ingest_table(table.header, table.rows, spec, schema, path);
}

// --- preprocessing --------------------------------------------------------

SurveyDataset preprocess(const SurveyDataset& raw) {
  const auto& spec = raw.spec;
  spec.validate();
  const auto order = spec.composition_order();
  const auto raw_names = spec.raw_columns();
  const auto direct = modeled_raw_index(spec);
  auto raw_index = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(raw_names.begin(), raw_names.end(), name) -
                                    raw_names.begin());
  };

  SurveyDataset d = raw;
  std::ostringstream offending;
  std::size_t offending_count = 0;

  // Decouple on the raw scale.
  std::vector<std::vector<double>> amounts;  // per recall, per component
  for (auto& ind : d.individuals) {
    for (auto& rec : ind.recalls) {
      std::vector<double> a(spec.components(), kNaN);
      for (std::size_t c = 0; c < spec.components(); ++c) {
        if (direct[c] != ComponentSpec::npos) a[c] = rec.raw[direct[c]];
      }
      for (std::size_t r : order) {
        const auto& rule = spec.composition[r];
        const double total = rec.raw[raw_index(rule.output)];
        double value = total;
        for (const auto& part : rule.parts) {
          const std::size_t c = spec.index_of(part.name);
          const double pv = c != ComponentSpec::npos ? a[c] : rec.raw[raw_index(part.name)];
          value -= part.coef * pv;
        }
        if (value < 0.0 && value >= -kResidualTolerance * std::max(1.0, std::abs(total))) {
          value = 0.0;
        }
        const std::size_t rc = spec.index_of(rule.residual);
        const bool must_be_positive = spec.kind(rc) == ComponentKind::energy;
        if (value < 0.0 || (must_be_positive && value <= 0.0)) {
          if (offending_count < 20) {
            offending << "\n  id '" << ind.id << "' recall " << rec.recall_index << ": "
                      << rule.residual << " = " << value;
          }
          ++offending_count;
        }
        a[rc] = value;
      }
      amounts.push_back(std::move(a));
    }
  }
  if (offending_count > 0) {
    throw ValidationError("decoupled components are not positive in " +
                          std::to_string(offending_count) + " record(s):" + offending.str());
  }

  // Half the smallest nonzero value replaces zeros of daily components and energy.
  std::vector<double> replacement(spec.components(), kNaN);
  for (std::size_t c = spec.J(); c < spec.components(); ++c) {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& a : amounts) {
      if (a[c] > 0.0) smallest = std::min(smallest, a[c]);
    }
    if (!std::isfinite(smallest)) {
      throw ValidationError("component '" + spec.component(c).name + "' has no nonzero values");
    }
    replacement[c] = 0.5 * smallest;
  }

  std::size_t k = 0;
  for (auto& ind : d.individuals) {
    for (auto& rec : ind.recalls) {
      auto& a = amounts[k++];
      rec.responses.assign(spec.rows(), 0.0);
      for (std::size_t c = 0; c < spec.components(); ++c) {
        double v = a[c];
        if (c >= spec.J() && v == 0.0) v = replacement[c];
        const std::size_t row = spec.amount_row(c);
        rec.responses[row] = v;
        if (c < spec.J()) rec.responses[row - 1] = v > 0.0 ? 1.0 : 0.0;
      }
    }
  }
  d.preprocessed = true;
  d.standardization.clear();
  return d;
}

void validate_for_fit(const SurveyDataset& d) {
  const auto& spec = d.spec;
  std::ostringstream problems;
  std::size_t count = 0;
  auto note = [&](const std::string& msg) {
    if (count < 20) problems << "\n  " << msg;
    ++count;
  };
  if (d.individuals.empty()) throw ValidationError("dataset has no individuals");
  for (const auto& ind : d.individuals) {
    if (!(ind.weight > 0.0)) note("id '" + ind.id + "': weight must be positive");
    if (ind.recalls.empty()) note("id '" + ind.id + "': no recalls");
    for (const auto& rec : ind.recalls) {
      const std::string where = "id '" + ind.id + "' recall " + std::to_string(rec.recall_index);
      if (rec.responses.size() != spec.rows()) {
        note(where + ": response layout mismatch");
        continue;
      }
      for (std::size_t c = 0; c < spec.components(); ++c) {
        const std::size_t row = spec.amount_row(c);
        const double y = rec.responses[row];
        const auto& name = spec.component(c).name;
        if (std::isnan(y)) {
          note(where + ": " + name + " missing (composition not decoupled; run preprocessing)");
        } else if (c < spec.J()) {
          const double q = rec.responses[row - 1];
          if (!((q == 0.0 && y == 0.0) || (q == 1.0 && y > 0.0))) {
            note(where + ": indicator/amount mismatch for " + name);
          }
        } else if (!(y > 0.0)) {
          note(where + ": " + name + " must be positive (zeros are replaced by preprocessing)");
        }
      }
    }
  }
  if (count > 0) {
    throw ValidationError("dataset is not ready for fitting (" + std::to_string(count) +
                          " problem(s)):" + problems.str());
  }
}

std::vector<Standardization> compute_standardization(const SurveyDataset& d) {
  const auto& spec = d.spec;
  std::vector<Standardization> out;
  for (std::size_t c = 0; c < spec.components(); ++c) {
    const std::size_t row = spec.amount_row(c);
    const double lambda = spec.component(c).lambda;
    std::vector<double> z;
    for (const auto& ind : d.individuals) {
      for (const auto& rec : ind.recalls) {
        const double y = rec.responses.at(row);
        if (y > 0.0) z.push_back(box_cox(y, lambda));
      }
    }
    const auto& name = spec.component(c).name;
    if (z.size() < 2) {
      throw ValidationError("standardization of '" + name + "' needs at least 2 positive values");
    }
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(z.size());
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(z.size() - 1));
    if (!(sd > 0.0)) {
      throw ValidationError("standardization of '" + name + "': transformed values are constant");
    }
    out.push_back({mean, sd});
  }
  return out;
}

SurveyDataset standardize(const SurveyDataset& d) {
  SurveyDataset out = d;
  out.standardization = compute_standardization(d);
  return out;
}

SurveyDataset with_weights(const SurveyDataset& d, const Eigen::VectorXd& weights) {
  if (static_cast<std::size_t>(weights.size()) != d.individuals.size()) {
    throw ValidationError("weight vector length does not match individual count");
  }
  SurveyDataset out = d;
  for (std::size_t i = 0; i < out.individuals.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      throw ValidationError("weight for id '" + out.individuals[i].id + "' must be positive");
    }
    out.individuals[i].weight = weights[i];
  }
  return out;
}

SurveyDataset with_normalized_weights(const SurveyDataset& d) {
  const double mean = d.total_weight() / static_cast<double>(d.individuals.size());
  SurveyDataset out = d;
  for (auto& ind : out.individuals) ind.weight /= mean;
  return out;
}

// --- design ---------------------------------------------------------------

namespace {

std::vector<std::string> split_term(const std::string& term) {
  std::vector<std::string> factors;
  std::string current;
  for (char ch : term) {
    if (ch == '*') {
      factors.push_back(current);
      current.clear();
    } else if (ch != ' ') {
      current.push_back(ch);
    }
  }
  factors.push_back(current);
  return factors;
}

DesignMatrices build_design_impl(const SurveyDataset& d, const DesignFormula& formula,
                                 const std::vector<CovariateScaling>* fixed) {
  // Resolve factor indices for each term.
  auto covariate_index = [&](const std::string& name) {
    auto it = std::find(d.covariate_names.begin(), d.covariate_names.end(), name);
    if (it == d.covariate_names.end()) {
      throw ValidationError("design: unknown covariate '" + name + "'");
    }
    return static_cast<std::size_t>(it - d.covariate_names.begin());
  };
  for (const auto& decl : formula.covariates) covariate_index(decl.name);
  std::vector<std::vector<std::size_t>> term_factors;
  for (const auto& term : formula.terms) {
    std::vector<std::size_t> f;
    for (const auto& factor : split_term(term)) {
      if (factor.empty()) throw ValidationError("design: malformed term '" + term + "'");
      f.push_back(covariate_index(factor));
    }
    term_factors.push_back(std::move(f));
  }

  DesignMatrices m;
  m.column_names = {"intercept", "weekend"};
  if (formula.sequence_dummy) m.column_names.push_back("second_recall");
  const std::size_t first_term = m.column_names.size();
  for (const auto& term : formula.terms) m.column_names.push_back(term);

  // Covariate centering and scaling.
  const std::size_t n_cov = d.covariate_names.size();
  std::vector<double> center(n_cov, 0.0), scale(n_cov, 1.0);
  if (fixed) {
    for (const auto& s : *fixed) {
      const std::size_t j = covariate_index(s.name);
      center[j] = s.center;
      scale[j] = s.scale;
    }
    m.scaling = *fixed;
  } else {
    for (const auto& decl : formula.covariates) {
      if (!decl.continuous) continue;
      const std::size_t j = covariate_index(decl.name);
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& ind : d.individuals) {
        for (const auto& rec : ind.recalls) {
          sum += rec.covariates.at(j);
          ++count;
        }
      }
      const double mean = count ? sum / static_cast<double>(count) : 0.0;
      double ss = 0.0;
      for (const auto& ind : d.individuals) {
        for (const auto& rec : ind.recalls) ss += std::pow(rec.covariates[j] - mean, 2);
      }
      const double sd = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
      center[j] = mean;
      scale[j] = sd > 0.0 ? sd : 1.0;
      m.scaling.push_back({decl.name, center[j], scale[j]});
    }
  }

  auto fill = [&](Eigen::Ref<Eigen::VectorXd> col, const RecallObservation& rec, bool weekend,
                  bool second) {
    col[0] = 1.0;
    col[1] = weekend ? 1.0 : 0.0;
    if (formula.sequence_dummy) col[2] = second ? 1.0 : 0.0;
    for (std::size_t t = 0; t < term_factors.size(); ++t) {
      double v = 1.0;
      for (std::size_t j : term_factors[t]) v *= (rec.covariates[j] - center[j]) / scale[j];
      col[static_cast<Eigen::Index>(first_term + t)] = v;
    }
  };

  const std::size_t cols = m.column_names.size();
  const std::size_t n = d.individuals.size();
  m.X.resize(cols, d.recall_count());
  m.X_weekend.resize(cols, n);
  m.X_weekday.resize(cols, n);
  m.offset.assign(1, 0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ind = d.individuals[i];
    for (std::size_t r = 0; r < ind.recalls.size(); ++r) {
      const auto& rec = ind.recalls[r];
      fill(m.X.col(k++), rec, rec.weekend, r > 0);
    }
    m.offset.push_back(k);
    if (!ind.recalls.empty()) {
      fill(m.X_weekend.col(i), ind.recalls.front(), true, false);
      fill(m.X_weekday.col(i), ind.recalls.front(), false, false);
    }
  }
  return m;
}

}  // namespace

DesignMatrices build_design(const SurveyDataset& d, const DesignFormula& formula) {
  return build_design_impl(d, formula, nullptr);
}

DesignMatrices build_design(const SurveyDataset& d, const DesignFormula& formula,
                            const std::vector<CovariateScaling>& scaling) {
  return build_design_impl(d, formula, &scaling);
}

}  // namespace usual
