#pragma once

#include "lmc/overdamped.hpp"
#include "lmc/plan.hpp"
#include "lmc/potentials.hpp"

namespace lmc {

/// The absolute constant c in the friction scale 1/(cκL).
inline constexpr double kFrictionC = 1000.0;

/// Scalar parts of the exact Gaussian kernel for step δ and k = 1/(cκL):
///   E[u'] = e^{-2δ} u − (k/2) a ∇U,   E[x'] = x + (a/2) u − (k/2) b ∇U,
/// with a = 1 − e^{-2δ}, b = δ − a/2, and per-coordinate covariance
/// [var_xx cov_xu; cov_xu var_uu].
struct KernelCoefficients {
  double delta = 0, k = 0;
  double decay = 1;  // e^{-2δ}
  double a = 0;      // 1 − e^{-2δ}
  double b = 0;      // δ − a/2
  double var_xx = 0, var_uu = 0, cov_xu = 0;
  double l11 = 0, l21 = 0, l22 = 0;  // Cholesky factor of the covariance, x first
  bool clamped = false;              // Schur complement went negative and was set to 0
};

KernelCoefficients kernel_coefficients(double delta, double k);

struct KernelMoments {
  Vector mean_x, mean_u;
  double var_xx = 0, var_uu = 0, cov_xu = 0;
  double c = kFrictionC;
  double kappa_L = 1;
};

KernelMoments ud_kernel_moments(const Potential& U, const Vector& x, const Vector& u, double delta,
                                double c = kFrictionC);

struct PhaseState {
  Vector x, u;
  std::uint64_t step_index = 0;
  RngStream rng;
  std::uint64_t clamped = 0;  // steps where the covariance had to be clamped
};

/// One exact-kernel step with precomputed coefficients. `grad` is scratch.
void ud_step(const Potential& U, PhaseState& s, const KernelCoefficients& kc, Vector& grad,
             Noise noise = Noise::on);
void ud_step(const Potential& U, PhaseState& s, double delta, Noise noise = Noise::on, double c = kFrictionC);

class UdEnsemble {
 public:
  UdEnsemble(const Potential& U, const Vector& x0, const Vector& u0, std::size_t members, std::uint64_t seed,
             double c = kFrictionC);
  void advance(double delta, std::uint64_t steps, Noise noise = Noise::on);
  void set_state(std::size_t i, const Vector& x, const Vector& u);
  Matrix positions() const;
  Matrix velocities() const;
  std::uint64_t steps_taken() const { return steps_; }
  std::uint64_t clamped_steps() const;
  std::size_t size() const { return chains_.size(); }

 private:
  const Potential& U_;
  double c_;
  std::vector<PhaseState> chains_;
  std::uint64_t steps_ = 0;
};

/// The kinetic chain from (x0, 0) for plan.n steps (friction constant plan.friction_c).
SampleRun ud_run(const Potential& U, const Vector& x0, const UnderdampedPlan& plan, std::size_t ensemble,
                 std::uint64_t seed, bool velocities = false);

}  // namespace lmc
