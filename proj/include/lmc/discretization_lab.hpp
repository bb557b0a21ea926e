#pragma once

#include "lmc/overdamped.hpp"
#include "lmc/plan.hpp"
#include "lmc/potentials.hpp"
#include "lmc/underdamped.hpp"

#include <iosfwd>

namespace lmc {

/// Errors against step size with a least-squares log-log slope.
struct ScalingReport {
  std::string kind;  // "od-one-step" or "ud-gradient-freeze"
  std::vector<double> deltas;      // strictly decreasing
  std::vector<double> errors;      // ensemble means
  std::vector<double> std_errors;
  std::vector<double> bounds;      // per-point theoretical bound, when one applies
  double slope = NAN, intercept = NAN;
  std::string status = "ok";       // or "insufficient-points"
  std::vector<std::string> warnings;
  std::size_t ensemble = 0;

  bool all_below_bound() const;
  json to_json() const;
  void write_csv(std::ostream& os) const;
};

/// Fits log(error) = slope·log(δ) + intercept over the positive errors.
void fit_loglog(ScalingReport& r);

struct OdSweepOptions {
  int ref_substeps = 256;    // reference integrator runs at δ/ref_substeps
  int path_resolution = 0;   // Brownian increments per δ (multiple of ref_substeps; 0 = same)
  Noise noise = Noise::on;   // off gives the drift-only single-step error
};

/// E|x̃_δ - x_δ|² for one Euler step x̃ against a fine Euler reference of the
/// continuous flow from the same x0 and Brownian path.
ScalingReport od_discretization_sweep(const Potential& U, const Vector& x0, const std::vector<double>& deltas,
                                      std::size_t ensemble, std::uint64_t seed, const OdSweepOptions& opt = {});

struct FreezeCheck {
  double delta = 0;
  double observed = 0;   // time-averaged E|∇U(x_t) - ∇U(x_{⌊t/δ⌋δ})|²
  double std_error = 0;
  double bound = 0;      // 10⁹ L² δ² (R² + d/m)
  double ratio = 0;      // observed / bound
  bool precondition_ok = true;  // δ ≤ 1/(12000κ)
  bool passed = false;
  json to_json() const;
};

/// Runs the underdamped chain from (x0, 0) for `horizon` time and measures the
/// gradient-freeze error at a uniformly drawn time inside every step.
FreezeCheck ud_freeze_error(const Potential& U, const Vector& x0, double delta, double horizon,
                            std::size_t ensemble, std::uint64_t seed, double c = kFrictionC);

/// The same check driven by a plan's δ and friction constant.
FreezeCheck ud_velocity_moment_check(const Potential& U, const UnderdampedPlan& plan, double horizon,
                                     std::size_t ensemble, std::uint64_t seed);

ScalingReport ud_freeze_sweep(const Potential& U, const Vector& x0, const std::vector<double>& deltas,
                              double horizon, std::size_t ensemble, std::uint64_t seed, double c = kFrictionC);

/// n points from hi down to lo, evenly spaced in log.
std::vector<double> geometric_grid(double hi, double lo, int n);

}  // namespace lmc
