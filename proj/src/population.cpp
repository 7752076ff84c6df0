#include "usual/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "usual/error.hpp"
#include "usual/rng.hpp"

namespace usual {

namespace {

double mix_days(double weekday, double weekend) { return (4.0 * weekday + 3.0 * weekend) / 7.0; }

double amount_part(double v, const TransformSpec& t, double sigma_qq, DomainPolicy policy,
                   std::size_t* clamped) {
  std::size_t local = 0;
  const double value = g_star_checked(v, t, sigma_qq, policy, local);
  if (clamped) *clamped += local;
  return value;
}

void require_nonempty(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
  if (values.size() == 0) throw ValidationError("statistic over an empty sample set");
  if (values.size() != weights.size()) throw ValidationError("values and weights differ in length");
}

}  // namespace

double usual_intake_episodic(const Eigen::VectorXd& beta_consumption,
                             const Eigen::VectorXd& beta_amount, double u_consumption,
                             double u_amount, const TransformSpec& t, double sigma_qq,
                             const Eigen::VectorXd& x_weekend, const Eigen::VectorXd& x_weekday,
                             DomainPolicy policy, std::size_t* clamped) {
  auto day = [&](const Eigen::VectorXd& x) {
    const double prob = normal_cdf(x.dot(beta_consumption) + u_consumption);
    if (prob == 0.0) return 0.0;
    return prob * amount_part(x.dot(beta_amount) + u_amount, t, sigma_qq, policy, clamped);
  };
  return mix_days(day(x_weekday), day(x_weekend));
}

double usual_intake_daily(const Eigen::VectorXd& beta, double u, const TransformSpec& t,
                          double sigma_qq, const Eigen::VectorXd& x_weekend,
                          const Eigen::VectorXd& x_weekday, DomainPolicy policy,
                          std::size_t* clamped) {
  const double weekday = amount_part(x_weekday.dot(beta) + u, t, sigma_qq, policy, clamped);
  const double weekend = amount_part(x_weekend.dot(beta) + u, t, sigma_qq, policy, clamped);
  return mix_days(weekday, weekend);
}

bool SampleTable::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t SampleTable::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown statistic '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

Eigen::VectorXd SampleTable::column(const std::string& name) const {
  return values.col(static_cast<Eigen::Index>(index_of(name)));
}

void SampleTable::add_column(const std::string& name, const Eigen::VectorXd& v) {
  if (has(name)) throw ValidationError("duplicate statistic '" + name + "'");
  if (values.cols() > 0 && v.size() != values.rows()) {
    throw ValidationError("column '" + name + "' has the wrong length");
  }
  const Eigen::Index cols = values.cols();
  Eigen::MatrixXd grown(v.size(), cols + 1);
  if (cols > 0) grown.leftCols(cols) = values;
  grown.col(cols) = v;
  values = std::move(grown);
  names.push_back(name);
}

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

std::string reported_energy_name(const ComponentSpec& spec) {
  for (const auto& rule : spec.composition) {
    if (rule.residual == spec.energy.name) return rule.output;
  }
  return spec.energy.name;
}

UsualIntakeSamples monte_carlo_population(const ParameterEstimates& est,
                                          const SurveyDataset& d, std::size_t B,
                                          std::uint64_t seed, DomainPolicy policy,
                                          bool parallel) {
  if (B == 0) throw ValidationError("number of usual-intake draws must be at least 1");
  const ComponentSpec& spec = est.spec;
  const DesignMatrices design = build_design(d, est.formula, est.scaling);
  const std::size_t n = d.individuals.size();
  const std::size_t C = spec.components();
  const Eigen::Index p = static_cast<Eigen::Index>(spec.rows());
  if (est.beta.rows() != p || est.beta.cols() != static_cast<Eigen::Index>(design.columns())) {
    throw ValidationError("parameter estimates do not match the dataset design");
  }
  const Eigen::MatrixXd L = covariance_root(est.sigma_u);

  UsualIntakeSamples out;
  out.B = B;
  out.table.names = spec.reported_names();
  const std::size_t reported = out.table.names.size();
  out.table.values.resize(static_cast<Eigen::Index>(n * B), static_cast<Eigen::Index>(reported));
  out.table.weights.resize(static_cast<Eigen::Index>(n * B));
  for (const auto& ind : d.individuals) out.ids.push_back(ind.id);

  std::vector<std::size_t> order = spec.composition_order();
  std::vector<std::size_t> clamps(n, 0);
  std::vector<Eigen::VectorXd> beta_rows(static_cast<std::size_t>(p));
  for (Eigen::Index r = 0; r < p; ++r) beta_rows[static_cast<std::size_t>(r)] = est.beta.row(r).transpose();

  auto fill = [&](std::size_t i) {
    RngStream rng(seed, stream_id(StreamFamily::population, i));
    const Eigen::VectorXd xw = design.X_weekend.col(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd xd = design.X_weekday.col(static_cast<Eigen::Index>(i));
    Eigen::VectorXd z(p);
    for (std::size_t b = 0; b < B; ++b) {
      for (Eigen::Index t = 0; t < p; ++t) z(t) = rng.normal();
      const Eigen::VectorXd u = L * z;
      const Eigen::Index row = static_cast<Eigen::Index>(i * B + b);
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t ar = spec.amount_row(c);
        const Eigen::Index a = static_cast<Eigen::Index>(ar);
        const double sqq = est.sigma_eps(a, a);
        double value;
        if (spec.kind(c) == ComponentKind::episodic) {
          value = usual_intake_episodic(beta_rows[ar - 1], beta_rows[ar], u(a - 1), u(a),
                                        est.transforms[c], sqq, xw, xd, policy, &clamps[i]);
        } else {
          value = usual_intake_daily(beta_rows[ar], u(a), est.transforms[c], sqq, xw, xd, policy,
                                     &clamps[i]);
        }
        out.table.values(row, static_cast<Eigen::Index>(c)) = value;
      }
      for (std::size_t ri : order) {
        const CompositionRule& rule = spec.composition[ri];
        const auto column = [&](const std::string& name) {
          const auto& names = out.table.names;
          return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), name) -
                                           names.begin());
        };
        double total = out.table.values(row, column(rule.residual));
        for (const auto& part : rule.parts) total += part.coef * out.table.values(row, column(part.name));
        out.table.values(row, column(rule.output)) = total;
      }
      out.table.weights(row) = d.individuals[i].weight;
    }
  };

  const long nl = static_cast<long>(n);
  if (parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < nl; ++i) {
      try {
        fill(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) fill(i);
  }
  out.clamped = std::accumulate(clamps.begin(), clamps.end(), std::size_t{0});
  return out;
}

double weighted_mean(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
  require_nonempty(values, weights);
  return values.dot(weights) / weights.sum();
}

double weighted_cdf(const Eigen::VectorXd& values, const Eigen::VectorXd& weights, double x) {
  require_nonempty(values, weights);
  double below = 0.0;
  for (Eigen::Index t = 0; t < values.size(); ++t) {
    if (values(t) <= x) below += weights(t);
  }
  return below / weights.sum();
}

std::vector<double> weighted_percentiles(const Eigen::VectorXd& values,
                                         const Eigen::VectorXd& weights,
                                         const std::vector<double>& ps) {
  require_nonempty(values, weights);
  for (double p : ps) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("percentile level must lie in (0, 1)");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) < values(b) || (values(a) == values(b) && a < b);
  });
  const double total = weights.sum();

  // Distinct values with the CDF evaluated at each.
  std::vector<double> levels;
  std::vector<double> cdf;
  double cum = 0.0;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    cum += weights(idx[t]);
    const bool last_of_value = t + 1 == idx.size() || values(idx[t + 1]) != values(idx[t]);
    if (last_of_value) {
      levels.push_back(values(idx[t]));
      cdf.push_back(cum / total);
    }
  }
  std::vector<double> out;
  for (double p : ps) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
    const std::size_t j = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    out.push_back(levels[j]);
  }
  return out;
}

double weighted_percentile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                           double p) {
  return weighted_percentiles(values, weights, {p}).front();
}

double weighted_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& weights) {
  require_nonempty(a, weights);
  if (a.size() != b.size()) throw ValidationError("correlation of columns with different lengths");
  const double W = weights.sum();
  const double ma = a.dot(weights) / W;
  const double mb = b.dot(weights) / W;
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double saa = (weights.array() * da * da).sum();
  const double sbb = (weights.array() * db * db).sum();
  const double sab = (weights.array() * da * db).sum();
  const bool a_const = (a.array() == a(0)).all();
  const bool b_const = (b.array() == b(0)).all();
  if (a_const || b_const || !(saa > 0.0) || !(sbb > 0.0)) return std::nan("");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Eigen::MatrixXd usual_correlations(const SampleTable& t, const std::vector<std::string>& names) {
  const Eigen::Index k = static_cast<Eigen::Index>(names.size());
  std::vector<Eigen::VectorXd> cols;
  for (const auto& name : names) cols.push_back(t.column(name));
  Eigen::MatrixXd R(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      const double r = weighted_correlation(cols[static_cast<std::size_t>(a)],
                                            cols[static_cast<std::size_t>(b)], t.weights);
      R(a, b) = R(b, a) = (a == b && std::isfinite(r)) ? 1.0 : r;
    }
  }
  return R;
}

SampleTable score_samples(const SampleTable& intakes, const std::vector<ScoringRule>& rules,
                          const std::string& energy_name, bool* complete) {
  const Eigen::VectorXd energy = intakes.column(energy_name);
  SampleTable out;
  out.weights = intakes.weights;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(intakes.size()));
  std::vector<Eigen::VectorXd> scores;
  for (const auto& rule : rules) {
    const Eigen::VectorXd x = intakes.column(rule.intake);
    Eigen::VectorXd dens(x.size());
    Eigen::VectorXd score(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) {
      dens(t) = rule_density(rule, x(t), energy(t));
      score(t) = score_from_density(rule, dens(t));
    }
    out.add_column("density." + rule.name, dens);
    scores.push_back(score);
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    out.add_column("score." + rules[r].name, scores[r]);
    total += scores[r];
  }
  out.add_column("total", total);
  if (complete) {
    bool all = true;
    for (const auto& name : hei2005_component_names()) {
      const bool found = std::any_of(rules.begin(), rules.end(),
                                     [&](const ScoringRule& r) { return r.name == name; });
      all = all && found;
    }
    *complete = all;
  }
  return out;
}

std::vector<double> score_rest_correlation(const SampleTable& scores,
                                           const std::vector<std::string>& score_names,
                                           const std::string& total_name) {
  const Eigen::VectorXd total = scores.column(total_name);
  std::vector<double> out;
  for (const auto& name : score_names) {
    const Eigen::VectorXd s = scores.column(name);
    out.push_back(weighted_correlation(s, total - s, scores.weights));
  }
  return out;
}

namespace {

void subset(const Eigen::VectorXd& values, const std::vector<bool>& condition,
            const Eigen::VectorXd& weights, Eigen::VectorXd& v, Eigen::VectorXd& w) {
  if (static_cast<Eigen::Index>(condition.size()) != values.size()) {
    throw ValidationError("condition length does not match the sample");
  }
  const auto kept = static_cast<Eigen::Index>(std::count(condition.begin(), condition.end(), true));
  if (kept == 0) throw ValidationError("conditioning event selects no samples");
  v.resize(kept);
  w.resize(kept);
  Eigen::Index j = 0;
  for (Eigen::Index t = 0; t < values.size(); ++t) {
    if (!condition[static_cast<std::size_t>(t)]) continue;
    v(j) = values(t);
    w(j) = weights(t);
    ++j;
  }
}

}  // namespace

double conditional_cdf(const Eigen::VectorXd& values, const std::vector<bool>& condition,
                       const Eigen::VectorXd& weights, double x) {
  Eigen::VectorXd v, w;
  subset(values, condition, weights, v, w);
  return weighted_cdf(v, w, x);
}

double conditional_percentile(const Eigen::VectorXd& values, const std::vector<bool>& condition,
                              const Eigen::VectorXd& weights, double p) {
  Eigen::VectorXd v, w;
  subset(values, condition, weights, v, w);
  return weighted_percentile(v, w, p);
}

double joint_exceedance(const SampleTable& t, const std::vector<std::string>& names,
                        const std::vector<double>& thresholds) {
  if (names.size() != thresholds.size()) {
    throw ValidationError("joint exceedance needs one threshold per component");
  }
  if (t.size() == 0) throw ValidationError("statistic over an empty sample set");
  std::vector<Eigen::Index> cols;
  for (const auto& name : names) cols.push_back(static_cast<Eigen::Index>(t.index_of(name)));
  double hit = 0.0;
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    bool all = true;
    for (std::size_t j = 0; j < cols.size() && all; ++j) all = t.values(r, cols[j]) >= thresholds[j];
    if (all) hit += t.weights(r);
  }
  return hit / t.weights.sum();
}

DistributionSummary summarize_distribution(const SampleTable& t, const std::string& name,
                                           const std::vector<double>& ps) {
  const Eigen::VectorXd v = t.column(name);
  DistributionSummary s;
  s.name = name;
  s.mean = weighted_mean(v, t.weights);
  s.percentiles = weighted_percentiles(v, t.weights, ps);
  return s;
}

}  // namespace usual
