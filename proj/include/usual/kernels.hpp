#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "usual/rng.hpp"
#include "usual/sampler.hpp"

// Hot loops of the sampler in two flavours: a straightforward serial
// reference and an OpenMP version. Parallel reductions sum fixed-size blocks
// in a fixed order, so results do not depend on the thread count.
namespace usual::kernels {

inline constexpr std::size_t kBlock = 256;

// Number of OpenMP threads in use (1 when OpenMP is disabled).
int thread_count();
// Sets the thread count from USUAL_NUM_THREADS when present.
void configure_threads_from_env();

// E = W - beta X - U[owner].
Eigen::MatrixXd residuals_serial(const ChainState& s, const ModelData& md);
Eigen::MatrixXd residuals_parallel(const ChainState& s, const ModelData& md);

// sum_k w_k e_k e_k^T over the columns of E.
Eigen::MatrixXd weighted_scatter_serial(const Eigen::MatrixXd& E, const Eigen::VectorXd& w);
Eigen::MatrixXd weighted_scatter_parallel(const Eigen::MatrixXd& E, const Eigen::VectorXd& w);

// sum_k w_k g_k x_k for a row vector g over recalls.
Eigen::VectorXd weighted_design_product_serial(const Eigen::MatrixXd& X,
                                               const Eigen::RowVectorXd& g,
                                               const Eigen::VectorXd& w);
Eigen::VectorXd weighted_design_product_parallel(const Eigen::MatrixXd& X,
                                                 const Eigen::RowVectorXd& g,
                                                 const Eigen::VectorXd& w);

// For every individual: W updates of each recall, then the U draw, using
// the individual's own stream.
void latent_sweep_serial(ChainState& s, const ModelData& md, std::vector<RngStream>& streams,
                         const UPosteriorCache& cache);
void latent_sweep_parallel(ChainState& s, const ModelData& md, std::vector<RngStream>& streams,
                           const UPosteriorCache& cache);

}  // namespace usual::kernels
