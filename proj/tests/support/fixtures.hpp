#pragma once

// Shared test fixtures and closed-form oracles. The oracles are written
// independently of the library code paths they check: plain loops over
// recalls, dense inverses, no shared helpers.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "usual/covariance.hpp"
#include "usual/rng.hpp"
#include "usual/sampler.hpp"

namespace fixtures {

using usual::ChainState;
using usual::ModelData;

// Random valid Sigma_eps parameters.
inline usual::PatternedCovParams random_eps(std::size_t J, std::size_t K, usual::RngStream& rng,
                                            double r_max = 0.95) {
  auto p = usual::PatternedCovParams::initial(J, K);
  for (auto& r : p.r) r = rng.uniform(-r_max, r_max);
  for (auto& t : p.theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (auto& v : p.v_diag) v = rng.uniform(0.3, 1.5);
  for (auto& v : p.v_free) v = rng.uniform(-0.6, 0.6);
  return p;
}

inline Eigen::MatrixXd random_spd(Eigen::Index p, usual::RngStream& rng, double ridge = 0.5) {
  Eigen::MatrixXd A(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = rng.normal() * 0.4;
  return A * A.transpose() + ridge * Eigen::MatrixXd::Identity(p, p);
}

// Hand-built model: J = 1 episodic and K = 1 daily component (p = 4), design
// (intercept, weekend, second_recall), three individuals with 2, 1 and 2
// recalls. Recalls 1 and 4 are non-consuming, so their amount is missing.
inline ModelData tiny_model() {
  ModelData md;
  md.J = 1;
  md.K = 1;
  md.p = 4;
  md.c = 3;
  md.n = 3;
  md.N = 5;
  md.offset = {0, 2, 3, 5};
  md.owner = {0, 0, 1, 2, 2};
  md.weight = Eigen::Vector3d(1.5, 0.7, 2.2);
  md.X.resize(3, 5);
  md.X << 1, 1, 1, 1, 1,
          0, 1, 1, 0, 0,
          0, 1, 0, 0, 1;
  const double nan = std::nan("");
  md.Q.resize(4, 5);
  md.Q << 1, 0, 1, 0, 1,
          0.4, nan, -0.8, nan, 1.1,
          0.3, -0.2, 1.0, 0.5, -0.7,
          -0.1, 0.6, 0.2, -1.3, 0.9;
  md.recall_weight.resize(5);
  for (std::size_t k = 0; k < 5; ++k) md.recall_weight(static_cast<Eigen::Index>(k)) = md.weight(static_cast<Eigen::Index>(md.owner[k]));
  md.weighted_recalls = md.recall_weight.sum();
  md.weighted_xtx = Eigen::MatrixXd::Zero(3, 3);
  for (Eigen::Index k = 0; k < 5; ++k) md.weighted_xtx += md.recall_weight(k) * md.X.col(k) * md.X.col(k).transpose();
  md.transforms.assign(3, usual::TransformSpec{});
  return md;
}

// A frozen state for tiny_model() with W consistent with the indicators.
inline ChainState tiny_state(const ModelData& md, std::uint64_t seed = 3) {
  usual::RngStream rng(seed, 99);
  ChainState s;
  s.beta.resize(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) s.beta(i, j) = rng.uniform(-0.5, 0.5);
  s.sigma_u = random_spd(4, rng);
  s.set_eps(random_eps(1, 1, rng));
  s.U.resize(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) s.U(i, j) = rng.normal() * 0.5;
  s.W = md.Q;
  for (Eigen::Index k = 0; k < 5; ++k) {
    s.W(0, k) = md.Q(0, k) == 1.0 ? 0.6 + 0.1 * k : -0.4 - 0.1 * k;
    if (std::isnan(md.Q(1, k))) s.W(1, k) = 0.25 * k - 0.3;
  }
  return s;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Conditional of beta row j: prior Normal(0, omega I), pseudo-likelihood
// sum_k w_k (-1/2) e_k' S^-1 e_k.
inline Moments beta_oracle(const ChainState& s, const ModelData& md, double omega, Eigen::Index j) {
  const Eigen::MatrixXd Sinv = s.sigma_eps.matrix().inverse();
  const Eigen::Index c = md.X.rows();
  Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(c, c) / omega;
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(c);
  for (Eigen::Index k = 0; k < md.X.cols(); ++k) {
    const double w = md.recall_weight(k);
    const Eigen::VectorXd x = md.X.col(k);
    Eigen::VectorXd e = s.W.col(k) - s.beta * x - s.U.col(static_cast<Eigen::Index>(md.owner[static_cast<std::size_t>(k)]));
    e(j) += s.beta.row(j).dot(x);  // residual with beta_j removed
    prec += w * Sinv(j, j) * x * x.transpose();
    lin += w * (Sinv.row(j).dot(e)) * x;
  }
  Moments m;
  m.cov = prec.inverse();
  m.mean = m.cov * lin;
  return m;
}

// Conditional of U_i with unit weight.
inline Moments u_oracle(const ChainState& s, const ModelData& md, std::size_t i) {
  const Eigen::MatrixXd Sinv = s.sigma_eps.matrix().inverse();
  Eigen::MatrixXd prec = s.sigma_u.inverse();
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(md.p));
  for (std::size_t k = md.offset[i]; k < md.offset[i + 1]; ++k) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    prec += Sinv;
    lin += Sinv * (s.W.col(kk) - s.beta * md.X.col(kk));
  }
  Moments m;
  m.cov = prec.inverse();
  m.mean = m.cov * lin;
  return m;
}

// Conditional of one latent row q of recall k given the other rows.
inline std::pair<double, double> w_row_oracle(const ChainState& s, const ModelData& md,
                                              Eigen::Index k, Eigen::Index q) {
  const Eigen::MatrixXd& S = s.sigma_eps.matrix();
  const Eigen::Index p = S.rows();
  const Eigen::VectorXd mu = s.beta * md.X.col(k) + s.U.col(static_cast<Eigen::Index>(md.owner[static_cast<std::size_t>(k)]));
  // Partition S into q and the rest.
  std::vector<Eigen::Index> rest;
  for (Eigen::Index t = 0; t < p; ++t)
    if (t != q) rest.push_back(t);
  const Eigen::Index r = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd Srr(r, r);
  Eigen::VectorXd Sqr(r), dev(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    Sqr(a) = S(q, rest[a]);
    dev(a) = s.W(rest[a], k) - mu(rest[a]);
    for (Eigen::Index b = 0; b < r; ++b) Srr(a, b) = S(rest[a], rest[b]);
  }
  const Eigen::VectorXd coef = Srr.ldlt().solve(Sqr);
  return {mu(q) + coef.dot(dev), S(q, q) - Sqr.dot(coef)};
}

// Largest standardized deviation of sample moments from (mean, cov): sample
// means against mean with SE sqrt(cov_aa / n); second moments about the true
// mean against cov_ab with SE sqrt((cov_aa cov_bb + cov_ab^2) / n).
inline double max_z_score(const std::vector<Eigen::VectorXd>& draws, const Moments& truth) {
  const double n = static_cast<double>(draws.size());
  const Eigen::Index d = truth.mean.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : draws) {
    mean += x;
    const Eigen::VectorXd c = x - truth.mean;
    second += c * c.transpose();
  }
  mean /= n;
  second /= n;
  double worst = 0.0;
  for (Eigen::Index a = 0; a < d; ++a) {
    worst = std::max(worst, std::abs(mean(a) - truth.mean(a)) / std::sqrt(truth.cov(a, a) / n));
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double se =
          std::sqrt((truth.cov(a, a) * truth.cov(b, b) + truth.cov(a, b) * truth.cov(a, b)) / n);
      worst = std::max(worst, std::abs(second(a, b) - truth.cov(a, b)) / se);
    }
  }
  return worst;
}

}  // namespace fixtures
