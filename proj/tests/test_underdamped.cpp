#include <doctest.h>

#include "lmc/underdamped.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace lmc;

TEST_CASE("kernel moments at the reference step") {
  Quadratic q(2, 1.0);
  Vector x = Vector::Zero(2), u = Vector::Zero(2);
  auto m = ud_kernel_moments(q, x, u, 0.1);
  CHECK(m.kappa_L == 1.0);
  CHECK(m.var_uu == doctest::Approx(3.296799539643607e-4).epsilon(1e-12));
  CHECK(m.var_xx == doctest::Approx(1.150741569072033e-6).epsilon(1e-12));
  CHECK(m.cov_xu == doctest::Approx(1.642926993983779e-5).epsilon(1e-12));
  CHECK(m.mean_x.norm() == 0.0);
  CHECK(m.mean_u.norm() == 0.0);
  CHECK_THROWS_AS(ud_kernel_moments(q, x, u, 0.0), DomainError);
}

TEST_CASE("kernel means") {
  Quadratic q(1, 2.0);  // κL = 2
  Vector x(1), u(1);
  x << 0.7;
  u << -0.3;
  const double d = 0.2, k = 1.0 / 2000.0, e = std::exp(-2 * d);
  auto m = ud_kernel_moments(q, x, u, d);
  const double g = 1.4;
  CHECK(m.mean_u(0) == doctest::Approx(u(0) * e - k / 2 * (1 - e) * g).epsilon(1e-14));
  CHECK(m.mean_x(0) == doctest::Approx(x(0) + 0.5 * (1 - e) * u(0) - k / 2 * (d - 0.5 * (1 - e)) * g).epsilon(1e-14));
  // Zero drift fixed point.
  Quadratic flat(1, 1.0);
  Vector z = Vector::Zero(1);
  auto m0 = ud_kernel_moments(flat, z, z, 0.5);
  CHECK(m0.mean_u(0) == 0.0);
  CHECK(m0.mean_x(0) == 0.0);
}

TEST_CASE("covariances match 50-digit closed forms across step sizes") {
  for (double d : {1e-6, 1e-5, 1e-4, 1e-3, 5e-3, 9.99e-3, 1.001e-2, 0.05, 0.3, 1.0, 3.0}) {
    const double k = 1e-3;
    auto kc = kernel_coefficients(d, k);
    auto o = testing::kernel_cov_oracle(d, k);
    INFO("delta=" << d);
    CHECK(kc.var_xx == doctest::Approx(o(0)).epsilon(1e-12));
    CHECK(kc.var_uu == doctest::Approx(o(1)).epsilon(1e-12));
    CHECK(kc.cov_xu == doctest::Approx(o(2)).epsilon(1e-12));
  }
}

TEST_CASE("kernel covariance is PSD and vanishes as delta -> 0") {
  for (double d = 1e-6; d <= 1.0; d *= 1.25) {
    auto kc = kernel_coefficients(d, 1e-3);
    CHECK(kc.var_xx * kc.var_uu - kc.cov_xu * kc.cov_xu >= -1e-18);
    CHECK_FALSE(kc.clamped);
  }
  auto tiny = kernel_coefficients(1e-9, 1e-3);
  CHECK(tiny.var_uu < 1e-11);
  CHECK(tiny.var_xx < 1e-27);
  CHECK(tiny.cov_xu < 1e-20);
  CHECK(tiny.decay == doctest::Approx(1.0));
}

TEST_CASE("noise off reproduces the means") {
  DoubleWell dw(2);
  PhaseState s{Vector::Zero(2), Vector::Zero(2), 0, RngStream(3, 0), 0};
  s.x << 0.4, -1.1;
  s.u << 0.02, 0.01;
  auto m = ud_kernel_moments(dw, s.x, s.u, 0.3);
  ud_step(dw, s, 0.3, Noise::off);
  CHECK((s.x - m.mean_x).norm() <= 1e-15);
  CHECK((s.u - m.mean_u).norm() <= 1e-15);
}

TEST_CASE("stationary covariance on a quadratic target") {
  // c = 1 mixes within a few hundred steps; the oracle handles any c.
  const double m = 1.0, delta = 0.5, c = 1.0;
  Quadratic q(2, m);
  const double k = 1.0 / (c * q.kappa() * q.L());
  auto P = testing::ud_stationary_cov_oracle(delta, k, m);
  UdEnsemble ens(q, Vector::Zero(2), Vector::Zero(2), 20000, 5, c);
  ens.advance(delta, 400);
  Matrix X = ens.positions(), V = ens.velocities();
  for (int j = 0; j < 2; ++j) {
    std::vector<double> xx(X.rows()), uu(X.rows()), xu(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      xx[i] = X(i, j) * X(i, j);
      uu[i] = V(i, j) * V(i, j);
      xu[i] = X(i, j) * V(i, j);
    }
    auto a = mean_se(xx), b = mean_se(uu), e = mean_se(xu);
    CHECK(std::abs(a.mean - P(0, 0)) <= 3 * a.std_error);
    CHECK(std::abs(b.mean - P(1, 1)) <= 3 * b.std_error);
    CHECK(std::abs(e.mean - P(0, 1)) <= 3 * e.std_error);
  }
}

TEST_CASE("velocity marginal with the default friction constant") {
  // With c = 1000 the velocity equilibrates in a few steps even though the
  // position mixes slowly; start positions from the stationary law.
  const double m = 1.0, delta = 0.5;
  Quadratic q(2, m);
  const double k = 1.0 / (kFrictionC * q.kappa() * q.L());
  auto P = testing::ud_stationary_cov_oracle(delta, k, m);
  CHECK(P(1, 1) == doctest::Approx(k).epsilon(0.01));
  CHECK(P(0, 0) == doctest::Approx(1.0 / m).epsilon(0.01));
  UdEnsemble ens(q, Vector::Zero(2), Vector::Zero(2), 20000, 6);
  Matrix X0 = sample_target(q, 20000, 60);
  for (std::size_t i = 0; i < ens.size(); ++i) ens.set_state(i, X0.row(i).transpose(), Vector::Zero(2));
  ens.advance(delta, 40);
  Matrix V = ens.velocities();
  std::vector<double> uu(V.rows());
  for (Eigen::Index i = 0; i < V.rows(); ++i) uu[i] = V(i, 0) * V(i, 0);
  auto b = mean_se(uu);
  CHECK(std::abs(b.mean - P(1, 1)) <= 3 * b.std_error);
}

TEST_CASE("refining delta moves stationary moments by O(delta)") {
  const double k = 1e-3, m = 1.0;
  double prev_gap = INFINITY;
  for (double d = 0.8; d > 0.01; d /= 2) {
    auto P = testing::ud_stationary_cov_oracle(d, k, m);
    const double gap = std::abs(P(0, 0) - 1.0 / m);
    CHECK(gap <= 2.0 * d * 1e-3 + 1e-12);
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("ud_run contract") {
  Quadratic q(2, 1.0);
  Vector x0(2);
  x0 << 0.3, 0.1;
  auto zero = ud_run(q, x0, manual_plan("ud", 0.5, 0), 4, 1, true);
  CHECK((zero.x.row(2).transpose() - x0).norm() == 0.0);
  CHECK(zero.u.row(2).norm() == 0.0);
  auto a = ud_run(q, x0, manual_plan("ud", 0.5, 30), 16, 8, true);
  auto b = ud_run(q, x0, manual_plan("ud", 0.5, 30), 16, 8, true);
  CHECK(a.x == b.x);
  CHECK(a.u == b.u);
  CHECK(a.warnings.empty());
}
