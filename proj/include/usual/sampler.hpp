#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usual/covariance.hpp"
#include "usual/data_model.hpp"
#include "usual/estimates.hpp"
#include "usual/rng.hpp"
#include "usual/transforms.hpp"

namespace usual {

// Priors on the standardized scale.
//  beta_j        ~ Normal(0, beta_variance * I)
//  Sigma_u       ~ InvWishart((dof - p - 1) * S_prior, dof), S_prior
//                  exchangeable with unit diagonal and the given correlation
//  r, theta, v   ~ Uniform on their supports
struct Priors {
  double beta_variance = 100.0;
  double sigma_u_correlation = 0.5;
  double sigma_u_dof = 21.0;

  Eigen::MatrixXd sigma_u_prior(std::size_t p) const;
  // Throws ValidationError unless dof > p + 1.
  void validate(std::size_t p) const;
};

struct ChainConfig {
  std::size_t iterations = 70000;
  std::size_t burn_in = 20000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  int grid_points = 41;
  double v_window = 0.4;
  // Batches for the batch-means MCSE; 0 picks floor(sqrt(retained draws)).
  std::size_t batch_count = 0;
  bool parallel = true;
  bool retain_draws = true;
  // Diagnostics line every this many iterations (0 disables).
  std::size_t diagnostics_every = 100;

  void validate() const;
};

// Discretization used for the radii and angles of Sigma_eps.
struct Grid {
  double lo = -1.0;
  double hi = 1.0;
  int points = 3;

  double value(int j) const { return lo + (hi - lo) * j / (points - 1); }
  int nearest(double x) const;
};

// {-0.99 + 2 * 0.99 * j / (M - 1)}, j = 0..M-1.
Grid radius_grid(int M);
// {-0.99 pi + 2 * 0.99 pi * j / (M - 1)}.
Grid angle_grid(int M);

// Flattened, standardized data the sampler works on.
struct ModelData {
  std::size_t J = 0, K = 0;
  std::size_t p = 0;  // latent rows
  std::size_t c = 0;  // design columns
  std::size_t n = 0;  // individuals
  std::size_t N = 0;  // recalls

  // Rows x recalls. Consumption rows hold 0/1 indicators; amount rows hold
  // standardized transformed amounts, NaN where the amount is unobserved.
  Eigen::MatrixXd Q;
  Eigen::MatrixXd X;                // columns x recalls
  std::vector<std::size_t> offset;  // recalls of individual i: [offset[i], offset[i+1])
  std::vector<std::size_t> owner;   // individual of each recall
  Eigen::VectorXd weight;           // per individual
  Eigen::VectorXd recall_weight;    // per recall, weight of its owner
  double weighted_recalls = 0.0;    // sum_i w_i m_i
  Eigen::MatrixXd weighted_xtx;     // sum_i w_i sum_k x x^T
  std::vector<TransformSpec> transforms;
  // Labels used for traces; may be left empty.
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;

  // Requires a preprocessed, standardized dataset.
  static ModelData build(const SurveyDataset& d, const DesignMatrices& design);

  std::size_t recalls_of(std::size_t i) const { return offset[i + 1] - offset[i]; }
  bool consumed(std::size_t l, std::size_t k) const { return Q(2 * l, k) == 1.0; }
};

struct ChainState {
  Eigen::MatrixXd beta;     // rows x columns
  Eigen::MatrixXd sigma_u;  // rows x rows
  PatternedCovParams eps;
  std::vector<int> r_index;
  std::vector<int> theta_index;
  CovMatrix sigma_eps;
  Eigen::MatrixXd U;  // rows x individuals
  Eigen::MatrixXd W;  // rows x recalls

  void set_eps(const PatternedCovParams& p);
  // W_k - beta x_k - U_owner(k).
  Eigen::VectorXd residual(const ModelData& md, std::size_t k) const;
  Eigen::MatrixXd residuals(const ModelData& md) const;
};

// Chain-level stream plus one latent stream per individual.
struct SamplerStreams {
  RngStream chain;
  std::vector<RngStream> latent;

  static SamplerStreams make(std::uint64_t seed, std::size_t individuals);
};

struct NormalMoments {
  double mean = 0.0;
  double variance = 1.0;
};

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Starting values: observed amounts copied into W, consumption rows set to
// +-|x'beta_prior + U + Z| with U ~ Normal(0, S_prior), followed by one pass
// of the W updates.
ChainState init_state(const ModelData& md, const Priors& pr, const ChainConfig& cfg,
                      SamplerStreams& streams);

// Complete-data pseudo-loglikelihood including prior terms. Returns -inf
// when a consumption latent disagrees with its indicator.
double complete_loglik(const ChainState& s, const ModelData& md, const Priors& pr);

// Conditional of a single latent row given the rest of its recall vector
// (unit weight).
NormalMoments w_row_conditional(const ChainState& s, const ModelData& md, std::size_t recall,
                                std::size_t row);

// Consumption latent of episodic component l: truncated normal on the side
// given by the indicator.
void update_W_consumption(ChainState& s, const ModelData& md, std::size_t recall, std::size_t l,
                          RngStream& rng);

// Unobserved amount latent of episodic component l; no-op when observed.
void update_W_amount_missing(ChainState& s, const ModelData& md, std::size_t recall,
                             std::size_t l, RngStream& rng);

// All consumption rows, then all unobserved amount rows, of one recall.
void update_W_recall(ChainState& s, const ModelData& md, std::size_t recall, RngStream& rng);

// Precision factorizations (Sigma_u^-1 + m Sigma_eps^-1) for each distinct
// recall count m.
class UPosteriorCache {
 public:
  UPosteriorCache(const ChainState& s, const ModelData& md);
  const Eigen::LLT<Eigen::MatrixXd>& precision(std::size_t m) const;
  const Eigen::MatrixXd& sigma_eps_inverse() const { return eps_inv_; }

 private:
  Eigen::MatrixXd eps_inv_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> by_count_;
};

GaussianMoments u_conditional(const ChainState& s, const ModelData& md, std::size_t i);
// The individual's weight is not used (unit weight).
void update_U(ChainState& s, const ModelData& md, std::size_t i, RngStream& rng,
              const UPosteriorCache& cache);
void update_U(ChainState& s, const ModelData& md, std::size_t i, RngStream& rng);

GaussianMoments beta_conditional(const ChainState& s, const ModelData& md, const Priors& pr,
                                 std::size_t row);
void update_beta(ChainState& s, const ModelData& md, const Priors& pr, std::size_t row,
                 RngStream& rng);

// Inverse-Wishart complete conditional of Sigma_u:
//   scale = (dof - p - 1) S_prior + sum_i w_i U_i U_i^T, dof_post = n + dof.
Eigen::MatrixXd sigma_u_posterior_scale(const ChainState& s, const ModelData& md,
                                        const Priors& pr);
double sigma_u_posterior_dof(const ModelData& md, const Priors& pr);
void update_sigma_u(ChainState& s, const ModelData& md, const Priors& pr, RngStream& rng);

// Draw from InvWishart(scale, dof) with density
// |Q|^{-(dof+p+1)/2} exp(-tr(scale Q^-1)/2).
Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng);

// Sufficient statistics of the Sigma_eps complete conditionals.
struct EpsTarget {
  Eigen::MatrixXd scatter;  // sum_i w_i sum_k e e^T
  double weighted_recalls = 0.0;

  // -(sum w m / 2) log|Sigma_eps| - tr(Sigma_eps^-1 scatter) / 2.
  double log_target(const CovMatrix& cov) const;
};

EpsTarget eps_target(const ChainState& s, const ModelData& md, bool parallel);

// Metropolis acceptance with exp(log_ratio) clamped to +-700.
bool metropolis_accept(double log_ratio, RngStream& rng);

// One step of the grid kernel: propose index-1, index, index+1 with equal
// probability; a proposal off the grid is rejected. Returns true when a move
// to a different point was accepted.
template <class LogTarget>
bool grid_metropolis_step(int& index, int points, double& current_log, LogTarget&& log_target,
                          RngStream& rng) {
  const int offset = static_cast<int>(rng.uniform() * 3.0) - 1;
  if (offset == 0) return false;
  const int candidate = index + offset;
  if (candidate < 0 || candidate >= points) return false;
  const double proposed = log_target(candidate);
  if (!metropolis_accept(proposed - current_log, rng)) return false;
  index = candidate;
  current_log = proposed;
  return true;
}

struct AcceptanceCounts {
  std::size_t r_moves = 0, r_proposals = 0;
  std::size_t theta_moves = 0, theta_proposals = 0;
  std::size_t v_diag_accepts = 0, v_diag_proposals = 0;
  std::size_t v_free_accepts = 0, v_free_proposals = 0;

  static double rate(std::size_t a, std::size_t n) { return n ? double(a) / double(n) : NAN; }
};

// Sigma_eps parameter updates; each rebuilds Sigma_eps on acceptance.
bool update_r(ChainState& s, const EpsTarget& t, std::size_t which, const Grid& grid,
              RngStream& rng);
bool update_theta(ChainState& s, const EpsTarget& t, std::size_t which, const Grid& grid,
                  RngStream& rng);
bool update_v_diag(ChainState& s, const EpsTarget& t, std::size_t which, double window,
                   RngStream& rng);
bool update_v_free(ChainState& s, const EpsTarget& t, std::size_t which, double window,
                   RngStream& rng);

// One full sweep: W and U per individual, beta rows, Sigma_u, then every
// Sigma_eps parameter (r, theta, v_diag, v_free).
void sweep(ChainState& s, const ModelData& md, const Priors& pr, const ChainConfig& cfg,
           SamplerStreams& streams, AcceptanceCounts& counts);

// Names of latent rows: "<c>.consumption" / "<c>.amount" for episodic
// components, the component name otherwise.
std::vector<std::string> row_names(const ComponentSpec& spec);

struct TraceSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double mcse = 0.0;
};

struct ChainResult {
  ParameterEstimates estimates;
  std::vector<std::string> trace_names;
  // Retained draws, one row per retained iteration.
  Eigen::MatrixXd draws;
  AcceptanceCounts acceptance;
  std::size_t retained = 0;

  std::vector<TraceSummary> summarize(std::size_t batch_count) const;
};

// Runs burn-in plus sampling. Point estimates are post-burn-in means of
// beta, Sigma_u and Sigma_eps. Traces cover every beta entry, the upper
// triangle of Sigma_u and the free entries of Sigma_eps.
ChainResult run_chain(const ModelData& md, const Priors& pr, const ChainConfig& cfg,
                      std::ostream* diagnostics = nullptr);

}  // namespace usual
