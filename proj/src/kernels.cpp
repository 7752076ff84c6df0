#include "usual/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace usual::kernels {

int thread_count() { return omp_get_max_threads(); }

void configure_threads_from_env() {
  const char* value = std::getenv("USUAL_NUM_THREADS");
  if (value == nullptr || *value == '\0') return;
  try {
    const int n = std::stoi(value);
    if (n > 0) omp_set_num_threads(n);
  } catch (const std::exception&) {
    // Unparseable values leave the OpenMP default in place.
  }
}

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

void residual_column(const ChainState& s, const ModelData& md, std::size_t k,
                     Eigen::MatrixXd& E) {
  E.col(k) = s.W.col(k) - s.beta * md.X.col(k) - s.U.col(md.owner[k]);
}

}  // namespace

Eigen::MatrixXd residuals_serial(const ChainState& s, const ModelData& md) {
  Eigen::MatrixXd E(md.p, md.N);
  for (std::size_t k = 0; k < md.N; ++k) residual_column(s, md, k, E);
  return E;
}

Eigen::MatrixXd residuals_parallel(const ChainState& s, const ModelData& md) {
  Eigen::MatrixXd E(md.p, md.N);
  const long N = static_cast<long>(md.N);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < N; ++k) residual_column(s, md, static_cast<std::size_t>(k), E);
  return E;
}

Eigen::MatrixXd weighted_scatter_serial(const Eigen::MatrixXd& E, const Eigen::VectorXd& w) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(E.rows(), E.rows());
  for (Eigen::Index k = 0; k < E.cols(); ++k) S.noalias() += w(k) * E.col(k) * E.col(k).transpose();
  return S;
}

Eigen::MatrixXd weighted_scatter_parallel(const Eigen::MatrixXd& E, const Eigen::VectorXd& w) {
  const std::size_t N = static_cast<std::size_t>(E.cols());
  const std::size_t nb = block_count(N);
  std::vector<Eigen::MatrixXd> partial(nb);
  const long nbl = static_cast<long>(nb);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < nbl; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(N, lo + kBlock);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(E.rows(), E.rows());
    for (std::size_t k = lo; k < hi; ++k) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      S.noalias() += w(kk) * E.col(kk) * E.col(kk).transpose();
    }
    partial[static_cast<std::size_t>(b)] = std::move(S);
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(E.rows(), E.rows());
  for (const auto& part : partial) S += part;
  return S;
}

Eigen::VectorXd weighted_design_product_serial(const Eigen::MatrixXd& X,
                                               const Eigen::RowVectorXd& g,
                                               const Eigen::VectorXd& w) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index k = 0; k < X.cols(); ++k) out.noalias() += (w(k) * g(k)) * X.col(k);
  return out;
}

Eigen::VectorXd weighted_design_product_parallel(const Eigen::MatrixXd& X,
                                                 const Eigen::RowVectorXd& g,
                                                 const Eigen::VectorXd& w) {
  const std::size_t N = static_cast<std::size_t>(X.cols());
  const std::size_t nb = block_count(N);
  std::vector<Eigen::VectorXd> partial(nb);
  const long nbl = static_cast<long>(nb);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < nbl; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(N, lo + kBlock);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(X.rows());
    for (std::size_t k = lo; k < hi; ++k) {
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      acc.noalias() += (w(kk) * g(kk)) * X.col(kk);
    }
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (const auto& part : partial) out += part;
  return out;
}

namespace {

void latent_individual(ChainState& s, const ModelData& md, std::size_t i, RngStream& rng,
                       const UPosteriorCache& cache) {
  for (std::size_t k = md.offset[i]; k < md.offset[i + 1]; ++k) update_W_recall(s, md, k, rng);
  update_U(s, md, i, rng, cache);
}

}  // namespace

void latent_sweep_serial(ChainState& s, const ModelData& md, std::vector<RngStream>& streams,
                         const UPosteriorCache& cache) {
  for (std::size_t i = 0; i < md.n; ++i) latent_individual(s, md, i, streams[i], cache);
}

void latent_sweep_parallel(ChainState& s, const ModelData& md, std::vector<RngStream>& streams,
                           const UPosteriorCache& cache) {
  const long n = static_cast<long>(md.n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    latent_individual(s, md, ii, streams[ii], cache);
  }
}

}  // namespace usual::kernels
