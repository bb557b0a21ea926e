#pragma once

#include "lmc/potentials.hpp"

#include <cstdint>
#include <string>

namespace lmc {

/// Step size and iteration count for one of the two samplers.
/// n is kept as a double because the bounds routinely exceed 2^64.
struct SamplerPlan {
  std::string sampler;  // "od" or "ud"
  double delta = 0;
  double n = 0;
  double epsilon = 0;
  double r_bar_sq = 0;      // od only: max(R², 8/m)
  double log_delta = 0;     // natural log, before any clamping
  double log_n = 0;
  double max_exponent = 0;  // largest c·LR² exponent appearing in the bound
  bool feasible = true;
  std::string note;
  double practical_scale = 1.0;
  double proof_delta = 0;   // od only: step cap with the proof's constants (1024, 32)
  double friction_c = 1000.0;  // ud only

  /// n as an integer step count; throws UsageError when infeasible or above 2^53.
  std::uint64_t steps() const;
  json to_json() const;
};

using OverdampedPlan = SamplerPlan;
using UnderdampedPlan = SamplerPlan;

inline constexpr double kLogOverflow = 700.0;

/// Overdamped planner (theorem constants 64, 16, 24, 5/4, 3/4). With
/// practical_scale λ < 1 the step is divided by λ (capped at min(0.99, 1/L))
/// and n multiplied by λ, preserving nδ.
OverdampedPlan plan_overdamped(const Potential& U, double epsilon, int d, double practical_scale = 1.0);

/// Underdamped planner (constants 10⁸, 10¹⁸, 30, 11/4, 11/2). Same practical
/// scaling, δ capped at 0.99.
UnderdampedPlan plan_underdamped(const Potential& U, double epsilon, int d, double practical_scale = 1.0);

/// A plan with explicit (δ, n), e.g. for desk-scale runs.
SamplerPlan manual_plan(const std::string& sampler, double delta, std::uint64_t n);

}  // namespace lmc
