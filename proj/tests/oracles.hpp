#pragma once

// Independent reference computations used by unit and acceptance tests.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lmc::testing {

using big = boost::multiprecision::cpp_bin_float_50;

struct BigPlan {
  big delta, n;
};

/// Overdamped step size and iteration bound evaluated directly (no logs) in 50 digits.
inline BigPlan od_plan_oracle(double Ld, double md, double Rd, int d, double epsd) {
  big L = Ld, m = md, R = Rd, eps = epsd, D = d;
  big Rb = std::max(R * R, big(8) / m);
  big cap1 = eps * eps * exp(-L * R * R) / (64 * L * L * Rb * Rb * D);
  big cap2 = eps * exp(-L * R * R / 2) / (2 * L * L * Rb * sqrt(60 * R * R + 6 * D / m));
  big t1 = 64 * exp(big(5) / 4 * L * R * R) * Rb * Rb * Rb * D / (eps * eps);
  big t2 = 16 * exp(big(3) / 4 * L * R * R) * Rb * sqrt(R * R + D / m) / eps;
  big n = L * L * std::max(t1, t2) * log(24 * exp(L * R * R / 4) * sqrt(R * R + D / m) / eps);
  return {std::min(cap1, cap2), ceil(n)};
}

inline big od_proof_delta_oracle(double Ld, double md, double Rd, int d, double epsd) {
  big L = Ld, m = md, R = Rd, eps = epsd, D = d;
  big M = std::max(R * R / 4, big(2) / m);
  return std::min(eps * eps * exp(-L * R * R) / (1024 * L * L * D * M * M),
                  eps * exp(-L * R * R / 2) / (32 * L * L * M * sqrt(60 * R * R + 6 * D / m)));
}

/// Underdamped step size and iteration bound in 50 digits.
inline BigPlan ud_plan_oracle(double Ld, double md, double Rd, int d, double epsd) {
  big L = Ld, m = md, R = Rd, eps = epsd, D = d;
  big kappa = L / m;
  big mx = std::max(kappa, L * R * R);
  big mom = sqrt(R * R + D / m);
  big delta = exp(-big(11) / 4 * L * R * R) * eps / (big("1e8") * mx * mom);
  big n = big("1e18") * exp(big(11) / 2 * L * R * R) * kappa * mx * mx *
          log(30 * exp(big(11) / 4 * L * R * R) * mom / eps) * mom / eps;
  return {delta, ceil(n)};
}

/// Closed-form kernel covariances in 50 digits: (var_xx, var_uu, cov_xu).
inline Eigen::Vector3d kernel_cov_oracle(double deltad, double kd) {
  big dl = deltad, k = kd;
  big vxx = k * (dl - exp(-4 * dl) / 4 - big(3) / 4 + exp(-2 * dl));
  big vuu = k * (1 - exp(-4 * dl));
  big cxu = k / 2 * (1 + exp(-4 * dl) - 2 * exp(-2 * dl));
  return {static_cast<double>(vxx), static_cast<double>(vuu), static_cast<double>(cxu)};
}

/// Stationary covariance of the underdamped chain on U = m|x|²/2 (per
/// coordinate): solves P = A P Aᵀ + Σ for the linear kernel by a 4x4 solve in
/// long double. Returns [P_xx, P_xu; P_xu, P_uu].
inline Eigen::Matrix2d ud_stationary_cov_oracle(double delta, double k, double m) {
  using LD = long double;
  using M2 = Eigen::Matrix<LD, 2, 2>;
  const LD d = delta, e2 = std::exp(-2 * d), a = 1 - e2, b = d - a / 2;
  M2 A;
  A << 1 - k / 2 * b * m, a / 2, -k / 2 * a * m, e2;
  const LD vxx = k * (d - std::exp(-4 * d) / 4 - 0.75L + e2);
  const LD vuu = k * (1 - std::exp(-4 * d));
  const LD cxu = k / 2 * a * a;
  M2 S;
  S << vxx, cxu, cxu, vuu;
  // vec(P) = (I - A ⊗ A)^{-1} vec(S)
  Eigen::Matrix<LD, 4, 4> K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) K(2 * i + p, 2 * j + q) = A(i, j) * A(p, q);
  Eigen::Matrix<LD, 4, 1> s;
  s << S(0, 0), S(0, 1), S(1, 0), S(1, 1);
  Eigen::Matrix<LD, 4, 1> v = (Eigen::Matrix<LD, 4, 4>::Identity() - K).fullPivLu().solve(s);
  Eigen::Matrix2d P;
  P << static_cast<double>(v(0)), static_cast<double>(v(1)), static_cast<double>(v(2)), static_cast<double>(v(3));
  return P;
}

}  // namespace lmc::testing
