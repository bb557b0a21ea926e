#include "lmc/underdamped.hpp"

#include <cmath>

namespace lmc {

namespace {

// Below this step the cancelling combinations come from their Taylor series.
constexpr double kSeriesBelow = 1e-2;

// δ − (1 − e^{-2δ})/2 = Σ_{n≥2} (−1)^n 2^{n−1} δ^n / n!
double b_series(double d) {
  double term = -d, sum = 0;  // (−1)^n 2^{n−1} δ^n / n!, starting at n = 1
  for (int n = 2; n < 30; ++n) {
    term *= -2.0 * d / n;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// δ − a/2 − a²/4 = ∫₀^δ (1 − e^{-2s})² ds = Σ_{n≥2} (−1)^n (4^n − 2^{n+1}) δ^{n+1}/(n+1)!
double vxx_series(double d) {
  double p4 = 4.0 * 4.0, p2 = 2.0 * 2.0 * 2.0;  // 4^n, 2^{n+1} at n = 2
  double fact = 6.0, pw = d * d * d;           // (n+1)!, δ^{n+1}
  double sum = 0;
  for (int n = 2; n < 30; ++n) {
    const double term = (n % 2 == 0 ? 1.0 : -1.0) * (p4 - p2) * pw / fact;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    p4 *= 4.0;
    p2 *= 2.0;
    pw *= d;
    fact *= n + 2;
  }
  return sum;
}

}  // namespace

KernelCoefficients kernel_coefficients(double delta, double k) {
  if (!(delta > 0)) throw DomainError("underdamped kernel: delta must be positive");
  require(k > 0, "underdamped kernel: friction scale must be positive");
  KernelCoefficients c;
  c.delta = delta;
  c.k = k;
  c.a = -std::expm1(-2.0 * delta);
  c.decay = 1.0 - c.a;
  const bool small = delta < kSeriesBelow;
  c.b = small ? b_series(delta) : delta - 0.5 * c.a;
  const double vxx = small ? vxx_series(delta) : delta - 0.5 * c.a - 0.25 * c.a * c.a;
  c.var_xx = k * vxx;
  c.var_uu = k * -std::expm1(-4.0 * delta);
  c.cov_xu = 0.5 * k * c.a * c.a;

  c.l11 = std::sqrt(std::max(c.var_xx, 0.0));
  c.l21 = c.l11 > 0 ? c.cov_xu / c.l11 : 0.0;
  double schur = c.var_uu - c.l21 * c.l21;
  if (c.var_xx < 0 || schur < 0) {
    c.clamped = true;
    schur = std::max(schur, 0.0);
  }
  c.l22 = std::sqrt(schur);
  return c;
}

KernelMoments ud_kernel_moments(const Potential& U, const Vector& x, const Vector& u, double delta, double c) {
  require(x.size() == U.dim() && u.size() == U.dim(), "ud_kernel_moments: dimension mismatch");
  const double kL = U.kappa() * U.L();
  const auto kc = kernel_coefficients(delta, 1.0 / (c * kL));
  Vector g(U.dim());
  checked_gradient(U, x, g);
  KernelMoments m;
  m.mean_u = kc.decay * u - 0.5 * kc.k * kc.a * g;
  m.mean_x = x + 0.5 * kc.a * u - 0.5 * kc.k * kc.b * g;
  m.var_xx = kc.var_xx;
  m.var_uu = kc.var_uu;
  m.cov_xu = kc.cov_xu;
  m.c = c;
  m.kappa_L = kL;
  return m;
}

void ud_step(const Potential& U, PhaseState& s, const KernelCoefficients& kc, Vector& grad, Noise noise) {
  checked_gradient(U, s.x, grad);
  const double hk = 0.5 * kc.k;
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    const double ui = s.u(i);
    double xn = s.x(i) + 0.5 * kc.a * ui - hk * kc.b * grad(i);
    double un = kc.decay * ui - hk * kc.a * grad(i);
    if (noise == Noise::on) {
      const double z1 = s.rng.gaussian(), z2 = s.rng.gaussian();
      xn += kc.l11 * z1;
      un += kc.l21 * z1 + kc.l22 * z2;
    }
    s.x(i) = xn;
    s.u(i) = un;
  }
  if (kc.clamped) ++s.clamped;
  ++s.step_index;
}

void ud_step(const Potential& U, PhaseState& s, double delta, Noise noise, double c) {
  const auto kc = kernel_coefficients(delta, 1.0 / (c * U.kappa() * U.L()));
  Vector g(U.dim());
  ud_step(U, s, kc, g, noise);
}

UdEnsemble::UdEnsemble(const Potential& U, const Vector& x0, const Vector& u0, std::size_t members,
                       std::uint64_t seed, double c)
    : U_(U), c_(c) {
  require(members >= 1, "ensemble size must be positive");
  require(x0.size() == U.dim() && u0.size() == U.dim(), "initial state has the wrong dimension");
  if (!x0.allFinite() || !u0.allFinite()) throw DomainError("initial state has non-finite coordinates");
  require(c > 0, "friction constant must be positive");
  chains_.reserve(members);
  for (std::size_t i = 0; i < members; ++i) chains_.push_back({x0, u0, 0, RngStream(seed, i), 0});
}

void UdEnsemble::advance(double delta, std::uint64_t steps, Noise noise) {
  const auto kc = kernel_coefficients(delta, 1.0 / (c_ * U_.kappa() * U_.L()));
  parallel_for(chains_.size(), [&](std::size_t i) {
    Vector g(U_.dim());
    for (std::uint64_t k = 0; k < steps; ++k) ud_step(U_, chains_[i], kc, g, noise);
  });
  steps_ += steps;
}

void UdEnsemble::set_state(std::size_t i, const Vector& x, const Vector& u) {
  require(i < chains_.size(), "set_state: member index out of range");
  require(x.size() == U_.dim() && u.size() == U_.dim(), "set_state: dimension mismatch");
  chains_[i].x = x;
  chains_[i].u = u;
}

Matrix UdEnsemble::positions() const {
  Matrix X(chains_.size(), U_.dim());
  for (std::size_t i = 0; i < chains_.size(); ++i) X.row(i) = chains_[i].x.transpose();
  return X;
}

Matrix UdEnsemble::velocities() const {
  Matrix V(chains_.size(), U_.dim());
  for (std::size_t i = 0; i < chains_.size(); ++i) V.row(i) = chains_[i].u.transpose();
  return V;
}

std::uint64_t UdEnsemble::clamped_steps() const {
  std::uint64_t n = 0;
  for (const auto& c : chains_) n += c.clamped;
  return n;
}

SampleRun ud_run(const Potential& U, const Vector& x0, const UnderdampedPlan& plan, std::size_t ensemble,
                 std::uint64_t seed, bool velocities) {
  SampleRun out;
  out.warnings = start_warnings(U, x0);
  UdEnsemble ens(U, x0, Vector::Zero(U.dim()), ensemble, seed, plan.friction_c);
  ens.advance(plan.delta, plan.steps());
  out.x = ens.positions();
  if (velocities) out.u = ens.velocities();
  if (ens.clamped_steps() > 0)
    out.warnings.push_back("kernel covariance clamped on " + std::to_string(ens.clamped_steps()) + " steps");
  return out;
}

}  // namespace lmc
