#include "usual/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "usual/error.hpp"

namespace usual {

std::size_t radius_count(std::size_t J) { return J - 1; }
std::size_t angle_count(std::size_t J) { return (J - 1) * (J - 1); }
std::size_t diag_count(std::size_t J, std::size_t K) { return J + K + 1; }

std::size_t free_count(std::size_t J, std::size_t K) {
  return free_entry_positions(J, K).size();
}

PatternedCovParams PatternedCovParams::initial(std::size_t J, std::size_t K) {
  if (J < 1) throw ValidationError("patterned covariance needs J >= 1");
  PatternedCovParams p;
  p.J = J;
  p.K = K;
  p.r.assign(radius_count(J), 0.0);
  p.theta.assign(angle_count(J), 0.0);
  p.v_diag.assign(diag_count(J, K), 1.0);
  p.v_free.assign(free_count(J, K), 0.0);
  return p;
}

void PatternedCovParams::audit() const {
  auto check = [](const char* name, std::size_t have, std::size_t want) {
    if (have != want) {
      std::ostringstream msg;
      msg << "patterned covariance: " << name << " has " << have
          << " entries, expected " << want;
      throw ValidationError(msg.str());
    }
  };
  if (J < 1) throw ValidationError("patterned covariance needs J >= 1");
  check("r", r.size(), radius_count(J));
  check("theta", theta.size(), angle_count(J));
  check("v_diag", v_diag.size(), diag_count(J, K));
  check("v_free", v_free.size(), free_count(J, K));
}

std::vector<std::size_t> diag_rows(std::size_t J, std::size_t K) {
  std::vector<std::size_t> rows;
  rows.reserve(J + K + 1);
  for (std::size_t l = 0; l < J; ++l) rows.push_back(2 * l + 1);
  for (std::size_t q = 2 * J; q < 2 * J + K + 1; ++q) rows.push_back(q);
  return rows;
}

std::vector<std::pair<std::size_t, std::size_t>> free_entry_positions(
    std::size_t J, std::size_t K) {
  std::vector<std::pair<std::size_t, std::size_t>> pos;
  for (std::size_t q = 2; q <= J; ++q) {
    const std::size_t row = 2 * q - 1;
    for (std::size_t col = 0; col + 1 < row; ++col) {
      pos.emplace_back(row, col);
    }
  }
  for (std::size_t row = 2 * J; row < 2 * J + K + 1; ++row) {
    for (std::size_t col = 0; col < row; ++col) pos.emplace_back(row, col);
  }
  return pos;
}

std::vector<std::pair<std::size_t, std::size_t>> sigma_free_positions(
    std::size_t J, std::size_t K) {
  const std::size_t dim = 2 * J + K + 1;
  std::vector<std::pair<std::size_t, std::size_t>> pos;
  for (std::size_t row = 1; row < dim; ++row) {
    for (std::size_t col = 0; col < row; ++col) {
      const bool pair = row < 2 * J && row % 2 == 1 && col == row - 1;
      if (!pair) pos.emplace_back(row, col);
    }
  }
  return pos;
}

Eigen::MatrixXd build_V(const PatternedCovParams& p) {
  p.audit();
  const std::size_t dim = p.dim();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim, dim);
  v(0, 0) = 1.0;

  const auto drows = diag_rows(p.J, p.K);
  for (std::size_t i = 0; i < drows.size(); ++i) v(drows[i], drows[i]) = p.v_diag[i];

  const auto fpos = free_entry_positions(p.J, p.K);
  for (std::size_t i = 0; i < fpos.size(); ++i) v(fpos[i].first, fpos[i].second) = p.v_free[i];

  // Consumption rows 2q lie on a sphere of radius 1: the first 2q entries
  // are r_q times a unit vector in hyperspherical coordinates.
  for (std::size_t q = 1; q < p.J; ++q) {
    const std::size_t row = 2 * q;
    const double radius = p.r[q - 1];
    const std::size_t offset = (q - 1) * (q - 1);
    const std::size_t n_angles = 2 * q - 1;
    double running = radius;
    for (std::size_t a = 0; a < n_angles; ++a) {
      v(row, a) = running * std::sin(p.theta[offset + a]);
      running *= std::cos(p.theta[offset + a]);
    }
    v(row, 2 * q - 1) = running;
    v(row, row) = std::sqrt(std::max(0.0, 1.0 - radius * radius));
  }

  // Amount row 2q+1 is orthogonal to consumption row 2q, which fixes the
  // entry just left of the diagonal.
  for (std::size_t q = 1; q < p.J; ++q) {
    const std::size_t row = 2 * q;
    const double pivot = v(row, row);
    if (pivot == 0.0) {
      throw NumericalError("build_V: r[" + std::to_string(q - 1) +
                           "] = +-1 makes the determined entry undefined");
    }
    double dot = 0.0;
    for (std::size_t col = 0; col < row; ++col) dot += v(row, col) * v(row + 1, col);
    v(row + 1, row) = -dot / pivot;
  }
  return v;
}

double logdet_sigma_eps(const PatternedCovParams& p) {
  p.audit();
  double total = 0.0;
  for (std::size_t i = 0; i < p.v_diag.size(); ++i) {
    const double d = p.v_diag[i];
    if (d == 0.0) {
      throw NumericalError("logdet_sigma_eps: v_diag[" + std::to_string(i) + "] = 0");
    }
    total += std::log(d * d);
  }
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    const double s = 1.0 - p.r[i] * p.r[i];
    if (!(s > 0.0)) {
      throw NumericalError("logdet_sigma_eps: |r[" + std::to_string(i) + "]| = 1");
    }
    total += std::log(s);
  }
  return total;
}

CovMatrix::CovMatrix(const PatternedCovParams& p) {
  v_ = build_V(p);
  const std::size_t dim = p.dim();

  const Eigen::VectorXd diag = v_.diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  const double smallest = diag.minCoeff();
  if (!(smallest > 0.0) || (largest / smallest) * (largest / smallest) > kMaxConditionEstimate) {
    std::ostringstream msg;
    msg << "Sigma_eps is numerically singular; |diag V| range [" << smallest << ", "
        << largest << "]";
    for (std::size_t i = 0; i < p.v_diag.size(); ++i) {
      if (std::abs(p.v_diag[i]) == smallest) msg << "; offending v_diag[" << i << "]";
    }
    for (std::size_t i = 0; i < p.r.size(); ++i) {
      if (std::sqrt(std::max(0.0, 1.0 - p.r[i] * p.r[i])) == smallest) {
        msg << "; offending r[" << i << "] = " << p.r[i];
      }
    }
    throw NumericalError(msg.str());
  }

  sigma_ = v_ * v_.transpose();
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  for (std::size_t l = 0; l < p.J; ++l) {
    sigma_(2 * l, 2 * l) = 1.0;
    sigma_(2 * l, 2 * l + 1) = 0.0;
    sigma_(2 * l + 1, 2 * l) = 0.0;
  }

  const Eigen::MatrixXd v_inv =
      v_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(dim, dim));
  inverse_ = v_inv.transpose() * v_inv;
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
  logdet_ = logdet_sigma_eps(p);
}

CovMatrix sigma_eps(const PatternedCovParams& p) { return CovMatrix(p); }

}  // namespace usual
