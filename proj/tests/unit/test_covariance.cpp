#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/fixtures.hpp"
#include "usual/covariance.hpp"
#include "usual/error.hpp"

using namespace usual;

TEST_CASE("parameter layout counts") {
  CHECK(radius_count(1) == 0);
  CHECK(radius_count(3) == 2);
  CHECK(angle_count(3) == 4);
  CHECK(diag_count(2, 1) == 4);
  // J = 2, K = 1: row 3 has columns 0..1; rows 4 and 5 have 4 and 5 entries
  CHECK(free_count(2, 1) == 2 + 4 + 5);
  CHECK(free_entry_positions(2, 1).size() == free_count(2, 1));
  CHECK(diag_rows(2, 1) == std::vector<std::size_t>{1, 3, 4, 5});
}

TEST_CASE("V for small cases") {
  auto p = PatternedCovParams::initial(1, 0);
  p.v_diag = {1.7, 1.0};
  const Eigen::MatrixXd V = build_V(p);
  CHECK(V(0, 0) == 1.0);
  CHECK(V(1, 0) == 0.0);
  CHECK(V(1, 1) == 1.7);

  auto q = PatternedCovParams::initial(1, 0);
  CHECK(q.v_free.size() == 2);
  q.v_free = {0.4, -0.9};
  q.v_diag = {0.5, 1.2};
  const Eigen::MatrixXd W = build_V(q);
  CHECK(W(1, 0) == 0.0);
  CHECK(W(1, 1) == 0.5);
  CHECK(W(2, 0) == 0.4);
  CHECK(W(2, 1) == -0.9);
  CHECK(W(2, 2) == 1.2);
  CHECK(W(0, 1) == 0.0);

  auto r = PatternedCovParams::initial(2, 0);
  r.r = {0.6};
  r.theta = {std::numbers::pi / 2};
  const Eigen::MatrixXd Vr = build_V(r);
  CHECK(Vr(2, 0) == doctest::Approx(0.6));
  CHECK(std::abs(Vr(2, 1)) < 1e-15);
  CHECK(Vr(2, 2) == doctest::Approx(0.8));
  CHECK(std::abs(Vr.row(2).dot(Vr.row(3))) < 1e-15);
  const Eigen::MatrixXd S = Vr * Vr.transpose();
  CHECK(S(0, 2) == doctest::Approx(0.6));
  CHECK(S(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("identity cases") {
  auto p = PatternedCovParams::initial(1, 0);
  CHECK(sigma_eps(p).matrix().isApprox(Eigen::MatrixXd::Identity(3, 3)));
  const CovMatrix c = sigma_eps(PatternedCovParams::initial(2, 1));
  CHECK((c.matrix() - Eigen::MatrixXd::Identity(5, 5)).norm() == 0.0);
  CHECK(c.logdet() == 0.0);
  CHECK(c.inverse().isApprox(Eigen::MatrixXd::Identity(5, 5)));
}

TEST_CASE("closed-form log-determinant") {
  auto p = PatternedCovParams::initial(2, 0);
  p.v_diag = {2.0, 1.0, 1.0};
  CHECK(logdet_sigma_eps(p) == doctest::Approx(std::log(4.0)));
  p.r = {1.0};
  CHECK_THROWS_AS(logdet_sigma_eps(p), NumericalError);
  CHECK_THROWS_AS(build_V(p), NumericalError);
  p.r = {0.0};
  p.v_diag = {0.0, 1.0, 1.0};
  CHECK_THROWS_AS(sigma_eps(p), NumericalError);
}

TEST_CASE("randomized pattern properties") {
  RngStream rng(17, 0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t J = 1 + static_cast<std::size_t>(t % 4);
    const std::size_t K = static_cast<std::size_t>(t % 3);
    const auto p = fixtures::random_eps(J, K, rng);
    const CovMatrix c = sigma_eps(p);
    const Eigen::MatrixXd& S = c.matrix();
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t l = 0; l < J; ++l) {
      const auto a = static_cast<Eigen::Index>(2 * l);
      CHECK(std::abs(S(a, a) - 1.0) <= 1e-12);
      CHECK(std::abs(S(a, a + 1)) <= 1e-12);
    }
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff() >= -1e-10);
    CHECK(c.logdet() == doctest::Approx(std::log(S.determinant())).epsilon(1e-8));
    CHECK((c.inverse() * S - Eigen::MatrixXd::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("dimension audit") {
  auto p = PatternedCovParams::initial(3, 1);
  p.theta.pop_back();
  CHECK_THROWS_AS(build_V(p), ValidationError);
  auto q = PatternedCovParams::initial(2, 0);
  q.v_free.push_back(0.0);
  CHECK_THROWS_AS(sigma_eps(q), ValidationError);
}

TEST_CASE("free covariance positions exclude structural entries") {
  for (auto [r, c] : sigma_free_positions(3, 2)) {
    CHECK(r > c);
    CHECK(!(c % 2 == 0 && r == c + 1 && r < 6));
  }
}
