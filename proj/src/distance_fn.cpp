#include "lmc/distance_fn.hpp"

#include "lmc/common.hpp"
#include "lmc/quadrature.hpp"

#include <cmath>
#include <ostream>

namespace lmc {

DistanceFn::DistanceFn(DistanceFnParams p, double tol, int nodes) : p_(p), tol_(tol) {
  if (!(p.alpha_f > 0) || !std::isfinite(p.alpha_f)) throw UsageError("distance_fn: alpha_f must be positive");
  if (!(p.r_f > 0) || !std::isfinite(p.r_f)) throw UsageError("distance_fn: r_f must be positive");
  require(nodes >= 16, "distance_fn: need at least 16 nodes");
  require(tol > 0, "distance_fn: tolerance must be positive");
  psi_cap_ = std::exp(-p.alpha_f * p.r_f * p.r_f);

  const std::size_t N = static_cast<std::size_t>(nodes);
  h_ = p.r_f / static_cast<double>(N);
  r_.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) r_[i] = p.r_f * static_cast<double>(i) / static_cast<double>(N);
  r_[N] = p.r_f;

  const double seg_tol = tol / static_cast<double>(N);
  auto ps = [this](double s) { return psi(s); };

  // Pass 1: Ψ and J = ∫ Ψ/ψ, nested within each segment.
  Psi_.assign(N + 1, 0.0);
  J_.assign(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) {
    const double a = r_[i - 1], b = r_[i], Pa = Psi_[i - 1];
    Psi_[i] = Pa + adaptive_simpson(ps, a, b, seg_tol * 1e-2);
    auto ratio = [&](double s) { return (Pa + adaptive_simpson(ps, a, s, seg_tol * 1e-4)) / psi(s); };
    J_[i] = J_[i - 1] + adaptive_simpson(ratio, a, b, 0.0, tol * 1e-2);
  }
  J_R_ = J_[N];

  // Pass 2: f = ∫ ψ g with g from the nested inner integral.
  f_.assign(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) {
    const double a = r_[i - 1], b = r_[i], Pa = Psi_[i - 1], Ja = J_[i - 1];
    auto integrand = [&](double s) {
      auto ratio = [&](double t) { return (Pa + adaptive_simpson(ps, a, t, seg_tol * 1e-4)) / psi(t); };
      const double J = Ja + adaptive_simpson(ratio, a, s, 0.0, tol * 1e-2);
      return psi(s) * (1.0 - J / (2.0 * J_R_));
    };
    f_[i] = f_[i - 1] + adaptive_simpson(integrand, a, b, seg_tol);
  }

  dPsi_.resize(N + 1);
  dJ_.resize(N + 1);
  df_.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    const double ps_i = psi(r_[i]);
    dPsi_[i] = ps_i;
    dJ_[i] = Psi_[i] / ps_i;
    df_[i] = ps_i * (1.0 - J_[i] / (2.0 * J_R_));
  }
}

void DistanceFn::check_r(double r) {
  if (!(r >= 0)) throw DomainError("distance_fn: r must be nonnegative");
}

std::size_t DistanceFn::segment(double r) const {
  const std::size_t last = r_.size() - 2;
  const auto i = static_cast<std::size_t>(r / h_);
  return std::min(i, last);
}

double DistanceFn::hermite(const std::vector<double>& y, const std::vector<double>& dy, double r) const {
  const std::size_t i = segment(r);
  const double h = r_[i + 1] - r_[i];
  const double t = (r - r_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * h * dy[i] + (-2 * t3 + 3 * t2) * y[i + 1] +
         (t3 - t2) * h * dy[i + 1];
}

double DistanceFn::psi(double r) const {
  check_r(r);
  return std::exp(-p_.alpha_f * std::min(r * r, p_.r_f * p_.r_f));
}

double DistanceFn::capital_psi(double r) const {
  check_r(r);
  if (r >= p_.r_f) return Psi_.back() + psi_cap_ * (r - p_.r_f);
  return hermite(Psi_, dPsi_, r);
}

double DistanceFn::inner(double r) const {
  check_r(r);
  if (r >= p_.r_f) return J_R_;
  return hermite(J_, dJ_, r);
}

double DistanceFn::g(double r) const {
  check_r(r);
  if (r >= p_.r_f) return 0.5;
  return 1.0 - inner(r) / (2.0 * J_R_);
}

double DistanceFn::f(double r) const {
  check_r(r);
  if (r >= p_.r_f) return f_.back() + 0.5 * psi_cap_ * (r - p_.r_f);
  return hermite(f_, df_, r);
}

double DistanceFn::fprime(double r) const { return psi(r) * g(r); }

double DistanceFn::fprime2_fd(double r, double h) const {
  check_r(r);
  const double R = p_.r_f;
  // f' has a kink at R_f; keep the stencil on one side of it.
  if (r <= R && r + h > R) return (3.0 * fprime(r) - 4.0 * fprime(r - h) + fprime(r - 2.0 * h)) / (2.0 * h);
  if (r > R && r - h < R) return (-3.0 * fprime(r) + 4.0 * fprime(r + h) - fprime(r + 2.0 * h)) / (2.0 * h);
  return (fprime(r + h) - fprime(std::abs(r - h))) / (2.0 * h);
}

double DistanceFn::fprime2_closed(double r) const {
  check_r(r);
  if (r >= p_.r_f) return 0.0;
  const double ps = psi(r);
  const double dpsi = -2.0 * p_.alpha_f * r * ps;
  const double dg = -capital_psi(r) / (2.0 * ps * J_R_);
  return dpsi * g(r) + ps * dg;
}

void DistanceFn::dump_csv(std::ostream& os) const {
  os << "r,psi,Psi,g,f,fprime\n";
  os.precision(17);
  auto row = [&](double r) {
    os << r << ',' << psi(r) << ',' << capital_psi(r) << ',' << g(r) << ',' << f(r) << ',' << fprime(r)
       << '\n';
  };
  for (double r : r_) row(r);
  const int tail = 64;
  for (int i = 1; i <= tail; ++i) row(p_.r_f * std::pow(10.0, static_cast<double>(i) / tail));
}

}  // namespace lmc
