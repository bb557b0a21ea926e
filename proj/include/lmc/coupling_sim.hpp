#pragma once

#include "lmc/distance_fn.hpp"
#include "lmc/potentials.hpp"
#include "lmc/underdamped.hpp"

#include <iosfwd>
#include <optional>

namespace lmc {

// ---- overdamped reflection coupling ----

/// Two overdamped chains driven by one Brownian increment; y sees it reflected
/// along γ = (x - y)/|x - y|. Once merged they move together.
struct OdCoupledPair {
  Vector x, y;
  double time = 0.0;
  double substep = 0.01;
  bool merged = false;
};

struct OdCouplingWorkspace {
  Vector gx, gy, noise;
};

/// One Euler–Maruyama step. The pair merges when |z| < 1e-9 R, when the
/// projected distance crosses zero, or when a Brownian-bridge draw says the
/// continuous distance process hit zero inside the step.
void od_coupled_step(const Potential& U, OdCoupledPair& pair, RngStream& rng, OdCouplingWorkspace& ws,
                     bool bridge = true);

// ---- underdamped θ-process ----

struct CouplingConstants {
  double c = kFrictionC;
  double kappa = 1.0, L = 1.0, R = 0.0;
  double t_sync = 0.0;  // 3(cκ)² ln 10
  double c_sync = 0.0;  // e^{-11LR²/4} / (600 (cκ)² ln 10)
  double c_ref = 0.0;   // min{e^{-11LR²/4}/(1375 κ L R²), e^{-11LR²/4}/(4cκ)}

  static CouplingConstants from(const Potential& U, double c = kFrictionC);
  double ck() const { return c * kappa; }
  double xi_decay_time() const { return 3.0 * ck() * ck(); }
  DistanceFnParams fn_params() const { return {L / 4.0, std::sqrt(11.0) * R}; }
  json to_json() const;
};

struct CouplingState {
  Vector x, u, y, v;
  double tau = 0.0;
  double rho = 0.0;
  int mu = 0;
  double xi = 0.0;
  double time = 0.0;
  std::uint64_t step = 0;
  Vector anchor_grad;  // ∇U(x) at the last grid time ⌊t/δ⌋δ

  Vector z() const { return x - y; }
  Vector w() const { return u - v; }
  /// √(|z|² + |z + w|²), the quantity compared against √5 R.
  double ball_norm() const;
  /// (1 + 2/(cκ))|z| + |z + w|
  double reflection_arg(const CouplingConstants& k) const;
};

/// θ₀ for given phase points: μ = 1 and τ = -T_sync inside the √5R ball,
/// μ = 0 and τ = 0 outside. ξ = 0.
CouplingState init_coupling_state(const Potential& U, Vector x, Vector u, Vector y, Vector v,
                                  const CouplingConstants& k);

struct CouplingWorkspace {
  Vector gx, gy, noise, phi;
};

enum class CouplingEvent { none, sync_start, to_reflection };

/// Advances θ by one substep. (x,u) uses the gradient frozen at the last
/// multiple of delta; (y,v) uses the live gradient. substep must divide delta.
CouplingEvent ud_coupled_step(const Potential& U, CouplingState& s, const CouplingConstants& k, double delta,
                              double substep, RngStream& rng, CouplingWorkspace& ws);

/// μ f((1+2/(cκ))|z| + |z+w|) + (1-μ)(f(ρ) e^{-C_sync (t-τ)} + ξ)
double lyapunov_eval(const CouplingState& s, const DistanceFn& fn, const CouplingConstants& k);

struct JumpViolation {
  std::size_t index = 0;
  double time = 0.0;
  double lhs = 0.0;  // f at the switch
  double rhs = 0.0;  // f(ρ) e^{-C_sync T_sync} + ξ
};

/// At every μ: 0 → 1 switch in `trace`, checks lhs ≤ rhs + tol_rel·f(ρ).
std::vector<JumpViolation> check_jump_nonpositive(const std::vector<CouplingState>& trace, const DistanceFn& fn,
                                                  const CouplingConstants& k, double tol_rel = 1e-3);

// ---- experiments ----

struct OdCouplingConfig {
  Vector x0;
  std::size_t pairs = 10000;
  double substep = 0.01;
  double horizon = 10.0;
  std::size_t record_every = 10;  // substeps between checkpoints
  std::uint64_t seed = 0;
  bool bridge = true;
};

struct OdCouplingResult {
  std::vector<double> times, mean_f, se_f, merged_fraction;
  DistanceFnParams fn;
  double slope = 0.0;  // least-squares slope of log E f(r_t)
  std::size_t fit_points = 0;
  double predicted_rate = 0.0;  // e^{-LR²/4} min{4/R², m/2}
  std::size_t merged_then_split = 0;
  json to_json() const;
};

OdCouplingResult run_od_coupling(const Potential& U, const OdCouplingConfig& cfg);

struct UdCouplingConfig {
  double c = kFrictionC;
  double delta = 0.1;
  int substeps = 20;  // per delta
  double horizon = 300.0;
  std::size_t trajectories = 1000;
  std::size_t record_every = 200;  // substeps between checkpoints
  std::vector<Vector> starts;      // x₀ values, assigned round robin; u₀ = 0
  std::uint64_t seed = 0;
  std::size_t traced = 4;  // trajectories written to the CSV trace
  double jump_tol_rel = 1e-3;
};

struct TraceRow {
  std::size_t trajectory;
  double t, z, w;
  int mu;
  double tau, rho, xi, lyapunov;
};

struct UdCouplingResult {
  std::vector<double> times, mean_L, se_L, mu_fraction;
  std::size_t switches = 0, sync_starts = 0;
  std::vector<JumpViolation> violations;
  double max_ball_excess = -INFINITY;  // max over μ = 1 states of ball_norm - √5R
  double ball_slack = 0.0;             // substep × largest drift of (z, z+w) seen
  std::size_t xi_monotone_failures = 0;
  std::size_t xi_reset_failures = 0;
  std::size_t sandwich_failures = 0;
  double floor = 0.0;         // 200 δ √(R² + d/m) / κ
  double max_increase = 0.0;  // max_j (mean_L[j] - min_{i<j} mean_L[i])
  double max_increase_z = 0.0;  // same, in units of the combined standard error
  bool monotone_within_floor = true;
  CouplingConstants constants;
  std::vector<TraceRow> trace;
  json to_json() const;
};

UdCouplingResult run_ud_coupling(const Potential& U, const UdCouplingConfig& cfg);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

/// Least-squares slope of y against t.
double fit_slope(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace lmc
