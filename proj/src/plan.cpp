#include "lmc/plan.hpp"

#include <cmath>
#include <limits>

namespace lmc {

namespace {

void check_inputs(const Potential& U, double epsilon, int d) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw DomainError("planner: epsilon must be positive");
  require(d >= 1, "planner: d must be positive");
  require(U.L() > 0 && U.m() > 0 && U.R() >= 0, "planner: invalid potential constants");
}

// Fills delta / n from their logs, flags overflow, applies practical scaling.
void finish(SamplerPlan& p, double delta_cap) {
  p.feasible = p.max_exponent <= kLogOverflow && p.log_n <= kLogOverflow && -p.log_delta <= kLogOverflow;
  if (!p.feasible) {
    p.note = "bound overflows: exponent " + std::to_string(p.max_exponent) + ", log n " + std::to_string(p.log_n) +
             ", log delta " + std::to_string(p.log_delta);
    p.delta = std::exp(p.log_delta);
    p.n = std::numeric_limits<double>::infinity();
    return;
  }
  p.delta = std::exp(p.log_delta);
  p.n = std::ceil(std::exp(p.log_n));
  if (p.n < 1) {
    p.n = 1;
    p.note = "log factor below one; n clamped to 1";
  }
  if (p.practical_scale != 1.0) {
    p.delta = p.delta / p.practical_scale;
    p.n = std::max(1.0, std::ceil(p.n * p.practical_scale));
  }
  if (p.delta >= delta_cap) {
    p.delta = delta_cap;
    p.note += (p.note.empty() ? "" : "; ") + std::string("delta clamped to ") + std::to_string(delta_cap);
  }
}

}  // namespace

std::uint64_t SamplerPlan::steps() const {
  if (!feasible || !(n <= 9007199254740992.0)) throw UsageError("plan: n is not executable (" + std::to_string(n) + ")");
  return static_cast<std::uint64_t>(n);
}

json SamplerPlan::to_json() const {
  json j{{"sampler", sampler},     {"delta", delta},     {"n", n},
         {"epsilon", epsilon},     {"log_delta", log_delta}, {"log_n", log_n},
         {"max_exponent", max_exponent}, {"feasible", feasible}, {"note", note},
         {"practical_scale", practical_scale}};
  if (sampler == "od") {
    j["r_bar_sq"] = r_bar_sq;
    j["proof_delta"] = proof_delta;
  } else {
    j["friction_c"] = friction_c;
  }
  if (!std::isfinite(n)) j["n"] = nullptr;
  return j;
}

OverdampedPlan plan_overdamped(const Potential& U, double epsilon, int d, double practical_scale) {
  check_inputs(U, epsilon, d);
  require(practical_scale > 0 && practical_scale <= 1, "planner: practical_scale must be in (0, 1]");
  const double L = U.L(), m = U.m(), R = U.R(), LR2 = L * R * R;
  const double le = std::log(epsilon), lL = std::log(L), ld = std::log(static_cast<double>(d));
  SamplerPlan p;
  p.sampler = "od";
  p.epsilon = epsilon;
  p.practical_scale = practical_scale;
  p.r_bar_sq = std::max(R * R, 8.0 / m);
  const double lRb = std::log(p.r_bar_sq);
  const double lmom = 0.5 * std::log(R * R + d / m);

  const double cap1 = 2 * le - LR2 - std::log(64.0) - 2 * lL - 2 * lRb - ld;
  const double cap2 = le - LR2 / 2 - std::log(2.0) - 2 * lL - lRb - 0.5 * std::log(60 * R * R + 6 * d / m);
  p.log_delta = std::min(cap1, cap2);

  const double t1 = std::log(64.0) + 1.25 * LR2 + 3 * lRb + ld - 2 * le;
  const double t2 = std::log(16.0) + 0.75 * LR2 + lRb + lmom - le;
  const double arg = std::log(24.0) + LR2 / 4 + lmom - le;
  p.log_n = 2 * lL + std::max(t1, t2) + (arg > 0 ? std::log(arg) : -std::numeric_limits<double>::infinity());
  p.max_exponent = 1.25 * LR2;

  const double M = std::max(R * R / 4, 2.0 / m);
  p.proof_delta =
      std::min(std::exp(2 * le - LR2) / (1024 * L * L * d * M * M),
               std::exp(le - LR2 / 2) / (32 * L * L * M * std::sqrt(60 * R * R + 6 * d / m)));
  finish(p, std::min(0.99, 1.0 / L));
  return p;
}

UnderdampedPlan plan_underdamped(const Potential& U, double epsilon, int d, double practical_scale) {
  check_inputs(U, epsilon, d);
  require(practical_scale > 0 && practical_scale <= 1, "planner: practical_scale must be in (0, 1]");
  const double L = U.L(), m = U.m(), R = U.R(), LR2 = L * R * R, kappa = L / m;
  const double le = std::log(epsilon);
  const double lmom = 0.5 * std::log(R * R + d / m);
  const double lmax = std::log(std::max(kappa, LR2));
  SamplerPlan p;
  p.sampler = "ud";
  p.epsilon = epsilon;
  p.practical_scale = practical_scale;
  p.log_delta = -2.75 * LR2 + le - 8 * std::log(10.0) - lmax - lmom;
  const double arg = std::log(30.0) + 2.75 * LR2 + lmom - le;
  p.log_n = 18 * std::log(10.0) + 5.5 * LR2 + std::log(kappa) + 2 * lmax +
            (arg > 0 ? std::log(arg) : -std::numeric_limits<double>::infinity()) + lmom - le;
  p.max_exponent = 5.5 * LR2;
  finish(p, 0.99);
  return p;
}

SamplerPlan manual_plan(const std::string& sampler, double delta, std::uint64_t n) {
  require(sampler == "od" || sampler == "ud", "plan: sampler must be od or ud");
  require(delta > 0 && delta < 1, "plan: delta must lie in (0, 1)");
  SamplerPlan p;
  p.sampler = sampler;
  p.delta = delta;
  p.n = static_cast<double>(n);
  p.log_delta = std::log(delta);
  p.log_n = std::log(static_cast<double>(std::max<std::uint64_t>(n, 1)));
  p.note = "manual";
  return p;
}

}  // namespace lmc
