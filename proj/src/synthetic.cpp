#include "usual/synthetic.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "usual/error.hpp"
#include "usual/population.hpp"
#include "usual/rng.hpp"
#include "usual/sampler.hpp"
#include "usual/transforms.hpp"

namespace usual {

void SyntheticTruth::validate() const {
  spec.validate();
  const Eigen::Index p = static_cast<Eigen::Index>(spec.rows());
  if (standardization.size() != spec.components()) {
    throw ValidationError("synthetic truth needs one standardization per component");
  }
  for (const auto& s : standardization) {
    if (!(s.sigma > 0.0)) throw ValidationError("synthetic standardization sigma must be positive");
  }
  if (beta.rows() != p || beta.cols() != 3) {
    throw ValidationError("synthetic beta must be rows x 3 (intercept, weekend, second_recall)");
  }
  if (sigma_u.rows() != p || sigma_u.cols() != p) {
    throw ValidationError("synthetic Sigma_u has the wrong dimension");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(sigma_u).info() != Eigen::Success) {
    throw ValidationError("synthetic Sigma_u must be positive definite");
  }
  if (eps.J != spec.J() || eps.K != spec.K()) {
    throw ValidationError("synthetic Sigma_eps parameters do not match the components");
  }
  eps.audit();
  if (individuals == 0 || recalls == 0) throw ValidationError("synthetic survey must be nonempty");
  if (!(weekend_probability >= 0.0 && weekend_probability <= 1.0)) {
    throw ValidationError("weekend probability must lie in [0, 1]");
  }
  if (!(weight_lo > 0.0) || weight_hi < weight_lo) {
    throw ValidationError("synthetic weights need 0 < weight_lo <= weight_hi");
  }
}

std::vector<TransformSpec> SyntheticTruth::transforms() const {
  std::vector<TransformSpec> out;
  for (std::size_t c = 0; c < spec.components(); ++c) {
    out.push_back({spec.component(c).lambda, standardization[c].mu, standardization[c].sigma});
  }
  return out;
}

SyntheticTruth SyntheticTruth::reference(std::size_t individuals) {
  SyntheticTruth t;
  t.spec.episodic = {{"fruit", "cups", 0.25}, {"whole_grains", "ounces", 0.0}};
  t.spec.daily = {{"sodium", "mg", 0.5}};
  t.spec.energy = {"energy", "kcal", 0.25};
  t.standardization = {{0.0, 1.0}, {-0.5, 0.8}, {107.0, 25.0}, {22.7, 3.0}};

  t.beta.resize(6, 3);
  t.beta << 0.30, -0.20, 0.0,
            0.20, 0.10, 0.0,
           -0.40, 0.15, 0.0,
            0.10, -0.10, 0.0,
            0.00, 0.20, 0.0,
            0.10, 0.25, 0.0;

  const Eigen::VectorXd sd = (Eigen::VectorXd(6) << 0.8, 0.6, 0.7, 0.5, 0.6, 0.7).finished().cwiseSqrt();
  Eigen::MatrixXd R = Eigen::MatrixXd::Constant(6, 6, 0.3);
  R.diagonal().setOnes();
  t.sigma_u = sd.asDiagonal() * R * sd.asDiagonal();

  t.eps = PatternedCovParams::initial(2, 1);
  t.eps.r = {0.3};
  t.eps.theta = {0.8};
  t.eps.v_diag = {0.8, 0.9, 0.7, 0.6};
  t.eps.v_free = {0.2, -0.1, 0.1, 0.2, 0.0, 0.1, 0.0, 0.1, 0.1, 0.2, 0.3};
  t.individuals = individuals;
  return t;
}

DesignFormula synthetic_formula() { return DesignFormula{}; }

csv::Table synthetic_table(const SyntheticTruth& truth, std::uint64_t seed,
                           std::size_t* resampled) {
  truth.validate();
  const ComponentSpec& spec = truth.spec;
  const Eigen::Index p = static_cast<Eigen::Index>(spec.rows());
  const auto transforms = truth.transforms();
  const Eigen::MatrixXd Lu = truth.sigma_u.llt().matrixL();
  const Eigen::MatrixXd V = build_V(truth.eps);
  const auto raw_names = spec.raw_columns();
  const auto order = spec.composition_order();

  csv::Table table;
  table.header = {"id", "weight", "recall", "weekend"};
  for (const auto& name : raw_names) table.header.push_back(name);

  std::size_t redraws = 0;
  for (std::size_t i = 0; i < truth.individuals; ++i) {
    RngStream rng(seed, stream_id(StreamFamily::synthetic, i));
    const double weight = truth.weight_lo == truth.weight_hi
                              ? truth.weight_lo
                              : rng.uniform(truth.weight_lo, truth.weight_hi);
    Eigen::VectorXd z(p);
    for (Eigen::Index t = 0; t < p; ++t) z(t) = rng.normal();
    const Eigen::VectorXd u = Lu * z;

    for (std::size_t k = 0; k < truth.recalls; ++k) {
      const bool weekend = rng.uniform() < truth.weekend_probability;
      const Eigen::Vector3d x(1.0, weekend ? 1.0 : 0.0, k == 1 ? 1.0 : 0.0);
      const Eigen::VectorXd mean = truth.beta * x + u;

      std::map<std::string, double> value;
      for (;;) {
        for (Eigen::Index t = 0; t < p; ++t) z(t) = rng.normal();
        const Eigen::VectorXd w = mean + V * z;
        bool ok = true;
        value.clear();
        for (std::size_t c = 0; c < spec.components() && ok; ++c) {
          const Eigen::Index row = static_cast<Eigen::Index>(spec.amount_row(c));
          const bool consumed = spec.kind(c) != ComponentKind::episodic || w(row - 1) > 0.0;
          double amount = 0.0;
          if (consumed) {
            try {
              amount = g_tr_inv(w(row), transforms[c]);
            } catch (const DomainError&) {
              ok = false;
            }
            if (ok && !(amount > 0.0)) ok = false;
          }
          value[spec.component(c).name] = amount;
        }
        if (ok) break;
        ++redraws;
      }
      for (std::size_t ri : order) {
        const CompositionRule& rule = spec.composition[ri];
        double total = value[rule.residual];
        for (const auto& part : rule.parts) total += part.coef * value[part.name];
        value[rule.output] = total;
      }

      std::vector<std::string> row{"s" + std::to_string(i + 1), csv::format(weight),
                                   std::to_string(k + 1), weekend ? "1" : "0"};
      for (const auto& name : raw_names) row.push_back(csv::format(value[name]));
      table.rows.push_back(std::move(row));
    }
  }
  if (resampled) *resampled = redraws;
  return table;
}

SurveyDataset generate_synthetic(const SyntheticTruth& truth, std::uint64_t seed,
                                 std::size_t* resampled) {
  const csv::Table t = synthetic_table(truth, seed, resampled);
  return ingest_table(t.header, t.rows, truth.spec, Schema{}, "<synthetic>");
}

ScaledTruth truth_on_scale(const SyntheticTruth& truth, const std::vector<Standardization>& to) {
  const ComponentSpec& spec = truth.spec;
  if (to.size() != spec.components()) throw ValidationError("standardization size mismatch");
  const Eigen::Index p = static_cast<Eigen::Index>(spec.rows());
  Eigen::VectorXd a = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (std::size_t c = 0; c < spec.components(); ++c) {
    const Eigen::Index row = static_cast<Eigen::Index>(spec.amount_row(c));
    a(row) = truth.standardization[c].sigma / to[c].sigma;
    b(row) = std::numbers::sqrt2 * (truth.standardization[c].mu - to[c].mu) / to[c].sigma;
  }
  ScaledTruth s;
  s.beta = a.asDiagonal() * truth.beta;
  s.beta.col(0) += b;
  s.sigma_u = a.asDiagonal() * truth.sigma_u * a.asDiagonal();
  s.sigma_eps = a.asDiagonal() * sigma_eps(truth.eps).matrix() * a.asDiagonal();
  return s;
}

ParameterEstimates truth_estimates(const SyntheticTruth& truth) {
  truth.validate();
  ParameterEstimates e;
  e.spec = truth.spec;
  e.formula = synthetic_formula();
  e.design_columns = {"intercept", "weekend", "second_recall"};
  e.row_names = row_names(truth.spec);
  e.transforms = truth.transforms();
  e.beta = truth.beta;
  e.sigma_u = truth.sigma_u;
  e.sigma_eps = sigma_eps(truth.eps).matrix();
  e.eps_mean = truth.eps;
  return e;
}

}  // namespace usual
