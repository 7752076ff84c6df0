#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace usual {

// Unconstrained parameters of the patterned error covariance
//   Sigma_eps = V V^T,
// with V lower triangular. Rows are laid out as
//   (consumption_1, amount_1, ..., consumption_J, amount_J, daily_1, ...,
//    daily_K, energy).
// Consumption rows have unit error variance and their errors are
// uncorrelated with the paired amount errors.
//
// Layout of the parameter vectors (0-based rows of V):
//   r       J-1 radii, r[q-1] drives consumption row 2q (q = 1..J-1).
//   theta   (J-1)^2 angles; row 2q uses theta[(q-1)^2 .. q^2-1].
//   v_diag  J+K+1 diagonal entries: amount rows 1,3,..,2J-1, then rows
//           2J..2J+K.
//   v_free  free below-diagonal entries, see free_entry_positions().
struct PatternedCovParams {
  std::size_t J = 1;
  std::size_t K = 0;
  std::vector<double> r;
  std::vector<double> theta;
  std::vector<double> v_diag;
  std::vector<double> v_free;

  // r = 0, theta = 0, v_diag = 1, v_free = 0.
  static PatternedCovParams initial(std::size_t J, std::size_t K);

  std::size_t dim() const { return 2 * J + K + 1; }

  // Throws ValidationError unless every vector has the required length.
  void audit() const;
};

std::size_t radius_count(std::size_t J);
std::size_t angle_count(std::size_t J);
std::size_t diag_count(std::size_t J, std::size_t K);
std::size_t free_count(std::size_t J, std::size_t K);

// Row index in V of each v_diag entry.
std::vector<std::size_t> diag_rows(std::size_t J, std::size_t K);

// (row, col) in V of each v_free entry: amount rows 2q-1 (q = 2..J),
// columns 0..2q-3; then daily/energy rows, every column left of the
// diagonal.
std::vector<std::pair<std::size_t, std::size_t>> free_entry_positions(
    std::size_t J, std::size_t K);

// Entries (row, col), row > col, of Sigma_eps that are not fixed by the
// pattern (i.e. excluding the consumption/amount pairs).
std::vector<std::pair<std::size_t, std::size_t>> sigma_free_positions(
    std::size_t J, std::size_t K);

Eigen::MatrixXd build_V(const PatternedCovParams& p);

// Closed-form log|Sigma_eps| = sum log v_diag^2 + sum log(1 - r^2).
// Throws NumericalError when the determinant is zero.
double logdet_sigma_eps(const PatternedCovParams& p);

// Sigma_eps with its inverse and log-determinant.
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(const PatternedCovParams& p);

  const Eigen::MatrixXd& matrix() const { return sigma_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  const Eigen::MatrixXd& factor() const { return v_; }
  double logdet() const { return logdet_; }
  std::size_t dim() const { return static_cast<std::size_t>(sigma_.rows()); }

 private:
  Eigen::MatrixXd v_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd inverse_;
  double logdet_ = 0.0;
};

// Condition estimate above which Sigma_eps is treated as singular.
inline constexpr double kMaxConditionEstimate = 1e12;

CovMatrix sigma_eps(const PatternedCovParams& p);

}  // namespace usual
