#include "usual/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "usual/error.hpp"
#include "usual/kernels.hpp"
#include "usual/mcse.hpp"
#include "usual/truncated_normal.hpp"

namespace usual {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd standard_normal_vector(RngStream& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index t = 0; t < n; ++t) z(t) = rng.normal();
  return z;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Eigen::MatrixXd Priors::sigma_u_prior(std::size_t p) const {
  const Eigen::Index n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n, n, sigma_u_correlation);
  s.diagonal().setOnes();
  return s;
}

void Priors::validate(std::size_t p) const {
  if (!(beta_variance > 0.0) || !std::isfinite(beta_variance)) {
    throw ValidationError("prior beta variance must be positive and finite");
  }
  if (!(sigma_u_dof > static_cast<double>(p) + 1.0)) {
    throw ValidationError("Sigma_u prior degrees of freedom must exceed dimension + 1 (" +
                          std::to_string(p + 1) + ")");
  }
  const double lower = p > 1 ? -1.0 / (static_cast<double>(p) - 1.0) : -1.0;
  if (!(sigma_u_correlation < 1.0) || !(sigma_u_correlation > lower)) {
    throw ValidationError("Sigma_u prior correlation does not give a positive definite matrix");
  }
}

void ChainConfig::validate() const {
  if (iterations <= burn_in) throw ValidationError("iterations must exceed burn-in");
  if (thin == 0) throw ValidationError("thinning must be at least 1");
  if (grid_points < 3 || grid_points % 2 == 0) {
    throw ValidationError("grid points must be odd and at least 3");
  }
  if (!(v_window > 0.0)) throw ValidationError("v proposal window must be positive");
}

int Grid::nearest(double x) const {
  const double t = (x - lo) / (hi - lo) * (points - 1);
  const long j = std::lround(t);
  return static_cast<int>(std::clamp<long>(j, 0, points - 1));
}

Grid radius_grid(int M) { return Grid{-0.99, 0.99, M}; }

Grid angle_grid(int M) { return Grid{-0.99 * std::numbers::pi, 0.99 * std::numbers::pi, M}; }

ModelData ModelData::build(const SurveyDataset& d, const DesignMatrices& design) {
  if (!d.preprocessed) throw ValidationError("dataset must be preprocessed before fitting");
  const ComponentSpec& spec = d.spec;
  if (d.standardization.size() != spec.components()) {
    throw ValidationError("dataset must be standardized before fitting");
  }
  ModelData md;
  md.J = spec.J();
  md.K = spec.K();
  md.p = spec.rows();
  md.c = design.columns();
  md.n = d.individuals.size();
  md.N = d.recall_count();
  if (static_cast<std::size_t>(design.X.cols()) != md.N) {
    throw ValidationError("design matrix does not match the dataset");
  }
  for (std::size_t c = 0; c < spec.components(); ++c) {
    md.transforms.push_back(
        {spec.component(c).lambda, d.standardization[c].mu, d.standardization[c].sigma});
  }

  const Eigen::Index p = static_cast<Eigen::Index>(md.p);
  md.Q.resize(p, static_cast<Eigen::Index>(md.N));
  md.X = design.X;
  md.offset = design.offset;
  md.owner.resize(md.N);
  md.weight.resize(static_cast<Eigen::Index>(md.n));
  md.recall_weight.resize(static_cast<Eigen::Index>(md.N));

  std::size_t k = 0;
  for (std::size_t i = 0; i < md.n; ++i) {
    const Individual& ind = d.individuals[i];
    md.weight(static_cast<Eigen::Index>(i)) = ind.weight;
    for (const RecallObservation& rec : ind.recalls) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      for (std::size_t l = 0; l < md.J; ++l) {
        const double ind_value = rec.responses[2 * l];
        const double amount = rec.responses[2 * l + 1];
        md.Q(static_cast<Eigen::Index>(2 * l), kk) = ind_value;
        md.Q(static_cast<Eigen::Index>(2 * l + 1), kk) =
            ind_value == 1.0 ? g_tr(amount, md.transforms[l])
                             : std::numeric_limits<double>::quiet_NaN();
      }
      for (std::size_t c = md.J; c < spec.components(); ++c) {
        const std::size_t row = spec.amount_row(c);
        md.Q(static_cast<Eigen::Index>(row), kk) = g_tr(rec.responses[row], md.transforms[c]);
      }
      md.owner[k] = i;
      md.recall_weight(kk) = ind.weight;
      ++k;
    }
  }
  md.row_labels = row_names(spec);
  md.column_labels = design.column_names;
  md.weighted_recalls = md.recall_weight.sum();
  md.weighted_xtx = md.X * md.recall_weight.asDiagonal() * md.X.transpose();
  return md;
}

void ChainState::set_eps(const PatternedCovParams& p) {
  sigma_eps = CovMatrix(p);
  eps = p;
}

Eigen::VectorXd ChainState::residual(const ModelData& md, std::size_t k) const {
  const Eigen::Index kk = static_cast<Eigen::Index>(k);
  return W.col(kk) - beta * md.X.col(kk) - U.col(static_cast<Eigen::Index>(md.owner[k]));
}

Eigen::MatrixXd ChainState::residuals(const ModelData& md) const {
  return kernels::residuals_serial(*this, md);
}

SamplerStreams SamplerStreams::make(std::uint64_t seed, std::size_t individuals) {
  SamplerStreams s;
  s.chain = RngStream(seed, stream_id(StreamFamily::chain, 0));
  s.latent.reserve(individuals);
  for (std::size_t i = 0; i < individuals; ++i) {
    s.latent.emplace_back(seed, stream_id(StreamFamily::latent, i));
  }
  return s;
}

ChainState init_state(const ModelData& md, const Priors& pr, const ChainConfig& cfg,
                      SamplerStreams& streams) {
  pr.validate(md.p);
  const Eigen::Index p = static_cast<Eigen::Index>(md.p);
  ChainState s;
  s.beta = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(md.c));
  s.sigma_u = pr.sigma_u_prior(md.p);
  const Grid rg = radius_grid(cfg.grid_points);
  const Grid tg = angle_grid(cfg.grid_points);
  PatternedCovParams eps = PatternedCovParams::initial(md.J, md.K);
  s.r_index.assign(eps.r.size(), rg.nearest(0.0));
  s.theta_index.assign(eps.theta.size(), tg.nearest(0.0));
  for (std::size_t t = 0; t < eps.r.size(); ++t) eps.r[t] = rg.value(s.r_index[t]);
  for (std::size_t t = 0; t < eps.theta.size(); ++t) eps.theta[t] = tg.value(s.theta_index[t]);
  s.set_eps(eps);

  const Eigen::MatrixXd L = s.sigma_u.llt().matrixL();
  s.U.resize(p, static_cast<Eigen::Index>(md.n));
  s.W.resize(p, static_cast<Eigen::Index>(md.N));
  for (std::size_t i = 0; i < md.n; ++i) {
    RngStream& rng = streams.latent[i];
    s.U.col(static_cast<Eigen::Index>(i)) = L * standard_normal_vector(rng, p);
    for (std::size_t k = md.offset[i]; k < md.offset[i + 1]; ++k) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      const Eigen::VectorXd mean = s.beta * md.X.col(kk) + s.U.col(static_cast<Eigen::Index>(i));
      for (Eigen::Index r = 0; r < p; ++r) {
        const std::size_t row = static_cast<std::size_t>(r);
        if (row < 2 * md.J && row % 2 == 0) {
          const double z = std::fabs(mean(r) + rng.normal());
          s.W(r, kk) = md.Q(r, kk) == 1.0 ? z : -z;
        } else if (std::isnan(md.Q(r, kk))) {
          s.W(r, kk) = 0.0;
        } else {
          s.W(r, kk) = md.Q(r, kk);
        }
      }
    }
  }
  for (std::size_t i = 0; i < md.n; ++i) {
    for (std::size_t k = md.offset[i]; k < md.offset[i + 1]; ++k) {
      update_W_recall(s, md, k, streams.latent[i]);
    }
  }
  return s;
}

double complete_loglik(const ChainState& s, const ModelData& md, const Priors& pr) {
  for (std::size_t k = 0; k < md.N; ++k) {
    for (std::size_t l = 0; l < md.J; ++l) {
      const double w = s.W(static_cast<Eigen::Index>(2 * l), static_cast<Eigen::Index>(k));
      if (md.consumed(l, k) != (w > 0.0)) return kNegInf;
    }
  }
  const double pd = static_cast<double>(md.p);
  Eigen::LLT<Eigen::MatrixXd> su(s.sigma_u);
  if (su.info() != Eigen::Success) return kNegInf;
  const Eigen::MatrixXd su_inv = su.solve(Eigen::MatrixXd::Identity(s.sigma_u.rows(), s.sigma_u.cols()));
  const double logdet_su = 2.0 * su.matrixLLT().diagonal().array().log().sum();

  double value = 0.0;
  const double total_weight = md.weight.sum();
  value += -0.5 * total_weight * logdet_su;
  for (std::size_t i = 0; i < md.n; ++i) {
    const auto u = s.U.col(static_cast<Eigen::Index>(i));
    value += -0.5 * md.weight(static_cast<Eigen::Index>(i)) * u.dot(su_inv * u);
  }
  value += -0.5 * s.beta.squaredNorm() / pr.beta_variance;

  const Eigen::MatrixXd prior_scale = (pr.sigma_u_dof - pd - 1.0) * pr.sigma_u_prior(md.p);
  value += -0.5 * (pr.sigma_u_dof + pd + 1.0) * logdet_su - 0.5 * (prior_scale.cwiseProduct(su_inv)).sum();

  const Eigen::MatrixXd E = s.residuals(md);
  const Eigen::MatrixXd S = kernels::weighted_scatter_serial(E, md.recall_weight);
  value += -0.5 * md.weighted_recalls * logdet_sigma_eps(s.eps);
  value += -0.5 * (s.sigma_eps.inverse().cwiseProduct(S)).sum();
  return value;
}

NormalMoments w_row_conditional(const ChainState& s, const ModelData& md, std::size_t recall,
                                std::size_t row) {
  const Eigen::VectorXd e = s.residual(md, recall);
  const Eigen::MatrixXd& P = s.sigma_eps.inverse();
  const Eigen::Index r = static_cast<Eigen::Index>(row);
  const double prr = P(r, r);
  NormalMoments m;
  m.mean = s.W(r, static_cast<Eigen::Index>(recall)) - P.row(r).dot(e) / prr;
  m.variance = 1.0 / prr;
  return m;
}

namespace {

// Redraws row `row` of recall k given the residual vector e, which is kept
// current.
void redraw_row(ChainState& s, std::size_t k, std::size_t row, Eigen::VectorXd& e, int side,
                RngStream& rng) {
  const Eigen::MatrixXd& P = s.sigma_eps.inverse();
  const Eigen::Index r = static_cast<Eigen::Index>(row);
  const Eigen::Index kk = static_cast<Eigen::Index>(k);
  const double prr = P(r, r);
  const double old = s.W(r, kk);
  const double mean = old - P.row(r).dot(e) / prr;
  const double sd = 1.0 / std::sqrt(prr);
  double draw;
  if (side > 0) {
    draw = truncated_normal_positive(rng, mean, sd);
  } else if (side < 0) {
    draw = truncated_normal_negative(rng, mean, sd);
  } else {
    draw = mean + sd * rng.normal();
  }
  e(r) += draw - old;
  s.W(r, kk) = draw;
}

}  // namespace

void update_W_consumption(ChainState& s, const ModelData& md, std::size_t recall, std::size_t l,
                          RngStream& rng) {
  Eigen::VectorXd e = s.residual(md, recall);
  redraw_row(s, recall, 2 * l, e, md.consumed(l, recall) ? 1 : -1, rng);
}

void update_W_amount_missing(ChainState& s, const ModelData& md, std::size_t recall,
                             std::size_t l, RngStream& rng) {
  if (md.consumed(l, recall)) return;
  Eigen::VectorXd e = s.residual(md, recall);
  redraw_row(s, recall, 2 * l + 1, e, 0, rng);
}

void update_W_recall(ChainState& s, const ModelData& md, std::size_t recall, RngStream& rng) {
  if (md.J == 0) return;
  Eigen::VectorXd e = s.residual(md, recall);
  for (std::size_t l = 0; l < md.J; ++l) {
    redraw_row(s, recall, 2 * l, e, md.consumed(l, recall) ? 1 : -1, rng);
  }
  for (std::size_t l = 0; l < md.J; ++l) {
    if (!md.consumed(l, recall)) redraw_row(s, recall, 2 * l + 1, e, 0, rng);
  }
}

UPosteriorCache::UPosteriorCache(const ChainState& s, const ModelData& md)
    : eps_inv_(s.sigma_eps.inverse()) {
  std::size_t max_m = 0;
  for (std::size_t i = 0; i < md.n; ++i) max_m = std::max(max_m, md.recalls_of(i));
  std::vector<bool> present(max_m + 1, false);
  for (std::size_t i = 0; i < md.n; ++i) present[md.recalls_of(i)] = true;

  const Eigen::Index p = s.sigma_u.rows();
  Eigen::LLT<Eigen::MatrixXd> su(s.sigma_u);
  if (su.info() != Eigen::Success) throw NumericalError("Sigma_u is not positive definite");
  const Eigen::MatrixXd su_inv = su.solve(Eigen::MatrixXd::Identity(p, p));
  by_count_.resize(max_m + 1);
  for (std::size_t m = 0; m <= max_m; ++m) {
    if (!present[m]) continue;
    by_count_[m].compute(symmetrized(su_inv + static_cast<double>(m) * eps_inv_));
    if (by_count_[m].info() != Eigen::Success) {
      throw NumericalError("random-effect posterior precision is not positive definite");
    }
  }
}

const Eigen::LLT<Eigen::MatrixXd>& UPosteriorCache::precision(std::size_t m) const {
  if (m >= by_count_.size() || by_count_[m].rows() == 0) {
    throw NumericalError("no cached precision for " + std::to_string(m) + " recalls");
  }
  return by_count_[m];
}

namespace {

Eigen::VectorXd u_data_term(const ChainState& s, const ModelData& md, std::size_t i,
                            const Eigen::MatrixXd& eps_inv) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(md.p));
  for (std::size_t k = md.offset[i]; k < md.offset[i + 1]; ++k) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    sum += s.W.col(kk) - s.beta * md.X.col(kk);
  }
  return eps_inv * sum;
}

}  // namespace

GaussianMoments u_conditional(const ChainState& s, const ModelData& md, std::size_t i) {
  const Eigen::Index p = static_cast<Eigen::Index>(md.p);
  const Eigen::MatrixXd& eps_inv = s.sigma_eps.inverse();
  const Eigen::MatrixXd su_inv = s.sigma_u.llt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd precision =
      symmetrized(su_inv + static_cast<double>(md.recalls_of(i)) * eps_inv);
  GaussianMoments out;
  out.cov = symmetrized(precision.llt().solve(Eigen::MatrixXd::Identity(p, p)));
  out.mean = out.cov * u_data_term(s, md, i, eps_inv);
  return out;
}

void update_U(ChainState& s, const ModelData& md, std::size_t i, RngStream& rng,
              const UPosteriorCache& cache) {
  const auto& llt = cache.precision(md.recalls_of(i));
  const Eigen::VectorXd c1 = u_data_term(s, md, i, cache.sigma_eps_inverse());
  Eigen::VectorXd draw = llt.solve(c1);
  draw += llt.matrixU().solve(standard_normal_vector(rng, static_cast<Eigen::Index>(md.p)));
  s.U.col(static_cast<Eigen::Index>(i)) = draw;
}

void update_U(ChainState& s, const ModelData& md, std::size_t i, RngStream& rng) {
  update_U(s, md, i, rng, UPosteriorCache(s, md));
}

namespace {

struct BetaRowPosterior {
  Eigen::LLT<Eigen::MatrixXd> precision;
  Eigen::VectorXd c1;
};

// G = Sigma_eps^-1 E for the current residuals E.
BetaRowPosterior beta_row_posterior(const ChainState& s, const ModelData& md, const Priors& pr,
                                    std::size_t row, const Eigen::MatrixXd& G, bool parallel) {
  const Eigen::Index j = static_cast<Eigen::Index>(row);
  const double sjj = s.sigma_eps.inverse()(j, j);
  const Eigen::RowVectorXd g = G.row(j) + sjj * (s.beta.row(j) * md.X);
  BetaRowPosterior out;
  out.c1 = parallel ? kernels::weighted_design_product_parallel(md.X, g, md.recall_weight)
                    : kernels::weighted_design_product_serial(md.X, g, md.recall_weight);
  const Eigen::Index c = static_cast<Eigen::Index>(md.c);
  Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(c, c) / pr.beta_variance + sjj * md.weighted_xtx;
  out.precision.compute(symmetrized(prec));
  if (out.precision.info() != Eigen::Success) {
    throw NumericalError("beta posterior precision is not positive definite (row " +
                         std::to_string(row) + ")");
  }
  return out;
}

Eigen::VectorXd draw_beta_row(const BetaRowPosterior& post, RngStream& rng) {
  Eigen::VectorXd draw = post.precision.solve(post.c1);
  draw += post.precision.matrixU().solve(standard_normal_vector(rng, post.c1.size()));
  return draw;
}

}  // namespace

GaussianMoments beta_conditional(const ChainState& s, const ModelData& md, const Priors& pr,
                                 std::size_t row) {
  const Eigen::MatrixXd G = s.sigma_eps.inverse() * s.residuals(md);
  const BetaRowPosterior post = beta_row_posterior(s, md, pr, row, G, false);
  GaussianMoments out;
  const Eigen::Index c = static_cast<Eigen::Index>(md.c);
  out.cov = symmetrized(post.precision.solve(Eigen::MatrixXd::Identity(c, c)));
  out.mean = post.precision.solve(post.c1);
  return out;
}

void update_beta(ChainState& s, const ModelData& md, const Priors& pr, std::size_t row,
                 RngStream& rng) {
  const Eigen::MatrixXd G = s.sigma_eps.inverse() * s.residuals(md);
  const BetaRowPosterior post = beta_row_posterior(s, md, pr, row, G, false);
  s.beta.row(static_cast<Eigen::Index>(row)) = draw_beta_row(post, rng).transpose();
}

Eigen::MatrixXd sigma_u_posterior_scale(const ChainState& s, const ModelData& md,
                                        const Priors& pr) {
  const double pd = static_cast<double>(md.p);
  Eigen::MatrixXd scale = (pr.sigma_u_dof - pd - 1.0) * pr.sigma_u_prior(md.p);
  if (md.n > 0) scale += kernels::weighted_scatter_serial(s.U, md.weight);
  return symmetrized(scale);
}

double sigma_u_posterior_dof(const ModelData& md, const Priors& pr) {
  return static_cast<double>(md.n) + pr.sigma_u_dof;
}

Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng) {
  const Eigen::Index p = scale.rows();
  // Sigma ~ IW(scale, dof)  <=>  Sigma^-1 ~ Wishart(scale^-1, dof).
  Eigen::LLT<Eigen::MatrixXd> sc(scale);
  if (sc.info() != Eigen::Success) {
    throw NumericalError("inverse-Wishart scale matrix is not positive definite");
  }
  const Eigen::MatrixXd scale_inv = sc.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> si(symmetrized(scale_inv));
  if (si.info() != Eigen::Success) {
    throw NumericalError("inverse-Wishart scale matrix is not positive definite");
  }
  const Eigen::MatrixXd L = si.matrixL();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    A(r, r) = std::sqrt(rng.chi_squared(dof - static_cast<double>(r)));
    for (Eigen::Index c = 0; c < r; ++c) A(r, c) = rng.normal();
  }
  const Eigen::MatrixXd M = L * A;  // Sigma^-1 = M M^T
  const Eigen::MatrixXd M_inv =
      M.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  return symmetrized(M_inv.transpose() * M_inv);
}

void update_sigma_u(ChainState& s, const ModelData& md, const Priors& pr, RngStream& rng) {
  Eigen::MatrixXd draw =
      draw_inverse_wishart(sigma_u_posterior_scale(s, md, pr), sigma_u_posterior_dof(md, pr), rng);
  if (draw.llt().info() != Eigen::Success) {
    throw NumericalError("Sigma_u draw is not positive definite");
  }
  s.sigma_u = std::move(draw);
}

double EpsTarget::log_target(const CovMatrix& cov) const {
  return -0.5 * weighted_recalls * cov.logdet() - 0.5 * cov.inverse().cwiseProduct(scatter).sum();
}

EpsTarget eps_target(const ChainState& s, const ModelData& md, bool parallel) {
  EpsTarget t;
  t.weighted_recalls = md.weighted_recalls;
  if (parallel) {
    t.scatter = kernels::weighted_scatter_parallel(kernels::residuals_parallel(s, md),
                                                   md.recall_weight);
  } else {
    t.scatter = kernels::weighted_scatter_serial(kernels::residuals_serial(s, md),
                                                 md.recall_weight);
  }
  return t;
}

bool metropolis_accept(double log_ratio, RngStream& rng) {
  const double u = rng.uniform();
  if (std::isnan(log_ratio)) return false;
  const double clamped = std::clamp(log_ratio, -700.0, 700.0);
  return u < std::exp(clamped);
}

namespace {

// Proposal evaluation that remembers the last candidate's covariance so it
// need not be rebuilt on acceptance.
struct Candidate {
  PatternedCovParams params;
  CovMatrix cov;
  bool valid = false;
};

double evaluate(const EpsTarget& t, Candidate& cand) {
  try {
    cand.cov = CovMatrix(cand.params);
    cand.valid = true;
    return t.log_target(cand.cov);
  } catch (const NumericalError&) {
    cand.valid = false;
    return kNegInf;
  }
}

bool grid_update(ChainState& s, const EpsTarget& t, std::vector<int>& indices,
                 std::vector<double> PatternedCovParams::*field, std::size_t which,
                 const Grid& grid, RngStream& rng) {
  double current = t.log_target(s.sigma_eps);
  Candidate cand{s.eps, {}, false};
  int index = indices[which];
  const bool moved = grid_metropolis_step(
      index, grid.points, current,
      [&](int j) {
        (cand.params.*field)[which] = grid.value(j);
        return evaluate(t, cand);
      },
      rng);
  if (moved && cand.valid) {
    indices[which] = index;
    s.eps = std::move(cand.params);
    s.sigma_eps = std::move(cand.cov);
    return true;
  }
  return false;
}

bool window_update(ChainState& s, const EpsTarget& t, std::vector<double> PatternedCovParams::*field,
                   std::size_t which, double window, double lo, double hi, bool open_lo,
                   RngStream& rng) {
  const double current = (s.eps.*field)[which];
  const double proposal = current + window * (rng.uniform() - 0.5);
  const bool inside = (open_lo ? proposal > lo : proposal >= lo) && proposal <= hi;
  if (!inside) return false;
  Candidate cand{s.eps, {}, false};
  (cand.params.*field)[which] = proposal;
  const double proposed = evaluate(t, cand);
  if (!cand.valid) return false;
  if (!metropolis_accept(proposed - t.log_target(s.sigma_eps), rng)) return false;
  s.eps = std::move(cand.params);
  s.sigma_eps = std::move(cand.cov);
  return true;
}

}  // namespace

bool update_r(ChainState& s, const EpsTarget& t, std::size_t which, const Grid& grid,
              RngStream& rng) {
  return grid_update(s, t, s.r_index, &PatternedCovParams::r, which, grid, rng);
}

bool update_theta(ChainState& s, const EpsTarget& t, std::size_t which, const Grid& grid,
                  RngStream& rng) {
  return grid_update(s, t, s.theta_index, &PatternedCovParams::theta, which, grid, rng);
}

bool update_v_diag(ChainState& s, const EpsTarget& t, std::size_t which, double window,
                   RngStream& rng) {
  return window_update(s, t, &PatternedCovParams::v_diag, which, window, 0.0, 3.0, true, rng);
}

bool update_v_free(ChainState& s, const EpsTarget& t, std::size_t which, double window,
                   RngStream& rng) {
  return window_update(s, t, &PatternedCovParams::v_free, which, window, -3.0, 3.0, false, rng);
}

namespace {

void beta_block(ChainState& s, const ModelData& md, const Priors& pr, bool parallel,
                RngStream& rng, Eigen::MatrixXd& E) {
  const Eigen::MatrixXd& P = s.sigma_eps.inverse();
  Eigen::MatrixXd G = P * E;
  for (std::size_t row = 0; row < md.p; ++row) {
    const Eigen::Index j = static_cast<Eigen::Index>(row);
    const BetaRowPosterior post = beta_row_posterior(s, md, pr, row, G, parallel);
    const Eigen::VectorXd fresh = draw_beta_row(post, rng);
    const Eigen::RowVectorXd delta = (fresh.transpose() - s.beta.row(j)) * md.X;
    E.row(j) -= delta;
    G.noalias() -= P.col(j) * delta;
    s.beta.row(j) = fresh.transpose();
  }
}

}  // namespace

void sweep(ChainState& s, const ModelData& md, const Priors& pr, const ChainConfig& cfg,
           SamplerStreams& streams, AcceptanceCounts& counts) {
  {
    const UPosteriorCache cache(s, md);
    if (cfg.parallel) {
      kernels::latent_sweep_parallel(s, md, streams.latent, cache);
    } else {
      kernels::latent_sweep_serial(s, md, streams.latent, cache);
    }
  }

  Eigen::MatrixXd E =
      cfg.parallel ? kernels::residuals_parallel(s, md) : kernels::residuals_serial(s, md);
  beta_block(s, md, pr, cfg.parallel, streams.chain, E);

  update_sigma_u(s, md, pr, streams.chain);

  EpsTarget target;
  target.weighted_recalls = md.weighted_recalls;
  target.scatter = cfg.parallel ? kernels::weighted_scatter_parallel(E, md.recall_weight)
                                : kernels::weighted_scatter_serial(E, md.recall_weight);

  const Grid rg = radius_grid(cfg.grid_points);
  const Grid tg = angle_grid(cfg.grid_points);
  for (std::size_t q = 0; q < s.eps.r.size(); ++q) {
    ++counts.r_proposals;
    if (update_r(s, target, q, rg, streams.chain)) ++counts.r_moves;
  }
  for (std::size_t q = 0; q < s.eps.theta.size(); ++q) {
    ++counts.theta_proposals;
    if (update_theta(s, target, q, tg, streams.chain)) ++counts.theta_moves;
  }
  for (std::size_t q = 0; q < s.eps.v_diag.size(); ++q) {
    ++counts.v_diag_proposals;
    if (update_v_diag(s, target, q, cfg.v_window, streams.chain)) ++counts.v_diag_accepts;
  }
  for (std::size_t q = 0; q < s.eps.v_free.size(); ++q) {
    ++counts.v_free_proposals;
    if (update_v_free(s, target, q, cfg.v_window, streams.chain)) ++counts.v_free_accepts;
  }
}

std::vector<std::string> row_names(const ComponentSpec& spec) {
  std::vector<std::string> names;
  for (const auto& e : spec.episodic) {
    names.push_back(e.name + ".consumption");
    names.push_back(e.name + ".amount");
  }
  for (const auto& d : spec.daily) names.push_back(d.name);
  names.push_back(spec.energy.name);
  return names;
}

std::vector<TraceSummary> ChainResult::summarize(std::size_t batch_count) const {
  std::vector<TraceSummary> out;
  const Eigen::Index n = draws.rows();
  for (Eigen::Index col = 0; col < draws.cols(); ++col) {
    const Eigen::VectorXd x = draws.col(col);
    TraceSummary t;
    t.name = trace_names[static_cast<std::size_t>(col)];
    t.mean = x.mean();
    t.sd = n > 1 ? std::sqrt((x.array() - t.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    t.mcse = batch_means_mcse(std::span<const double>(x.data(), static_cast<std::size_t>(n)),
                              batch_count);
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

struct TraceLayout {
  std::vector<std::string> names;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sigma_u_entries;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sigma_eps_entries;
};

TraceLayout trace_layout(const ModelData& md, const std::vector<std::string>& rows,
                         const std::vector<std::string>& columns) {
  TraceLayout t;
  for (std::size_t r = 0; r < md.p; ++r) {
    for (std::size_t c = 0; c < md.c; ++c) t.names.push_back("beta." + rows[r] + "." + columns[c]);
  }
  for (std::size_t a = 0; a < md.p; ++a) {
    for (std::size_t b = a; b < md.p; ++b) {
      t.names.push_back("sigma_u." + rows[a] + "." + rows[b]);
      t.sigma_u_entries.emplace_back(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  for (std::size_t r : diag_rows(md.J, md.K)) {
    t.names.push_back("sigma_eps." + rows[r] + "." + rows[r]);
    t.sigma_eps_entries.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  }
  for (const auto& [r, c] : sigma_free_positions(md.J, md.K)) {
    t.names.push_back("sigma_eps." + rows[r] + "." + rows[c]);
    t.sigma_eps_entries.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return t;
}

void welford(Eigen::MatrixXd& mean, const Eigen::MatrixXd& x, double k) { mean += (x - mean) / k; }

void welford(std::vector<double>& mean, const std::vector<double>& x, double k) {
  for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += (x[t] - mean[t]) / k;
}

std::string state_dump(const ChainState& s) {
  std::ostringstream os;
  os << "beta:\n" << s.beta << "\nsigma_u:\n" << s.sigma_u << "\nsigma_eps:\n"
     << s.sigma_eps.matrix() << "\n";
  return os.str();
}

}  // namespace

ChainResult run_chain(const ModelData& md, const Priors& pr, const ChainConfig& cfg,
                      std::ostream* diagnostics) {
  cfg.validate();
  pr.validate(md.p);
  if (md.n == 0) throw ValidationError("dataset has no individuals");

  std::vector<std::string> rows = md.row_labels;
  std::vector<std::string> columns = md.column_labels;
  if (rows.size() != md.p) {
    rows.clear();
    for (std::size_t r = 0; r < md.p; ++r) rows.push_back("row" + std::to_string(r));
  }
  if (columns.size() != md.c) {
    columns.clear();
    for (std::size_t c = 0; c < md.c; ++c) columns.push_back("x" + std::to_string(c));
  }
  const TraceLayout layout = trace_layout(md, rows, columns);

  SamplerStreams streams = SamplerStreams::make(cfg.seed, md.n);
  ChainState s = init_state(md, pr, cfg, streams);
  AcceptanceCounts counts;

  ChainResult result;
  result.trace_names = layout.names;
  Eigen::MatrixXd beta_mean = Eigen::MatrixXd::Zero(s.beta.rows(), s.beta.cols());
  Eigen::MatrixXd su_mean = Eigen::MatrixXd::Zero(s.sigma_u.rows(), s.sigma_u.cols());
  Eigen::MatrixXd se_mean = Eigen::MatrixXd::Zero(s.sigma_u.rows(), s.sigma_u.cols());
  PatternedCovParams eps_mean = PatternedCovParams::initial(md.J, md.K);
  std::fill(eps_mean.v_diag.begin(), eps_mean.v_diag.end(), 0.0);
  std::vector<double> draw_buffer;

  if (diagnostics) {
    *diagnostics << "iteration loglik acc_r acc_theta acc_v_diag acc_v_free beta_00 sigma_u_00\n";
  }

  std::size_t kept = 0;
  std::size_t retained = 0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    sweep(s, md, pr, cfg, streams, counts);

    const bool report = cfg.diagnostics_every > 0 && it % cfg.diagnostics_every == 0;
    if (report || it == cfg.iterations) {
      const double ll = complete_loglik(s, md, pr);
      if (!std::isfinite(ll)) {
        const std::string dump = state_dump(s);
        if (diagnostics) *diagnostics << "non-finite loglik at iteration " << it << "\n" << dump;
        throw NumericalError("non-finite complete-data loglikelihood at iteration " +
                             std::to_string(it) + "\n" + dump);
      }
      if (diagnostics && report) {
        *diagnostics << it << ' ' << ll << ' '
                     << AcceptanceCounts::rate(counts.r_moves, counts.r_proposals) << ' '
                     << AcceptanceCounts::rate(counts.theta_moves, counts.theta_proposals) << ' '
                     << AcceptanceCounts::rate(counts.v_diag_accepts, counts.v_diag_proposals)
                     << ' '
                     << AcceptanceCounts::rate(counts.v_free_accepts, counts.v_free_proposals)
                     << ' ' << s.beta(0, 0) << ' ' << s.sigma_u(0, 0) << '\n';
      }
    }

    if (it <= cfg.burn_in) continue;
    ++kept;
    const double kd = static_cast<double>(kept);
    welford(beta_mean, s.beta, kd);
    welford(su_mean, s.sigma_u, kd);
    welford(se_mean, s.sigma_eps.matrix(), kd);
    welford(eps_mean.r, s.eps.r, kd);
    welford(eps_mean.theta, s.eps.theta, kd);
    welford(eps_mean.v_diag, s.eps.v_diag, kd);
    welford(eps_mean.v_free, s.eps.v_free, kd);

    if (cfg.retain_draws && (kept - 1) % cfg.thin == 0) {
      ++retained;
      for (Eigen::Index r = 0; r < s.beta.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.beta.cols(); ++c) draw_buffer.push_back(s.beta(r, c));
      }
      for (const auto& [a, b] : layout.sigma_u_entries) draw_buffer.push_back(s.sigma_u(a, b));
      for (const auto& [a, b] : layout.sigma_eps_entries) {
        draw_buffer.push_back(s.sigma_eps.matrix()(a, b));
      }
    }
  }

  const Eigen::Index width = static_cast<Eigen::Index>(layout.names.size());
  result.draws.resize(static_cast<Eigen::Index>(retained), width);
  for (std::size_t t = 0; t < retained; ++t) {
    for (Eigen::Index c = 0; c < width; ++c) {
      result.draws(static_cast<Eigen::Index>(t), c) =
          draw_buffer[t * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
    }
  }
  result.retained = retained;
  result.acceptance = counts;

  ParameterEstimates& e = result.estimates;
  e.row_names = rows;
  e.design_columns = columns;
  e.transforms = md.transforms;
  e.beta = beta_mean;
  e.sigma_u = symmetrized(su_mean);
  e.sigma_eps = symmetrized(se_mean);
  e.eps_mean = eps_mean;
  e.iterations = cfg.iterations;
  e.burn_in = cfg.burn_in;
  e.retained = retained;
  e.seed = cfg.seed;
  return result;
}

}  // namespace usual
