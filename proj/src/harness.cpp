#include "lmc/harness.hpp"

#include "lmc/coupling_sim.hpp"
#include "lmc/discretization_lab.hpp"
#include "lmc/metrics.hpp"
#include "lmc/overdamped.hpp"
#include "lmc/plan.hpp"
#include "lmc/underdamped.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#ifndef LMC_VERSION
#define LMC_VERSION "0.0.0"
#endif

namespace lmc {

std::string software_version() { return LMC_VERSION; }

namespace {

using Clock = std::chrono::steady_clock;

struct Assertion {
  std::string name;
  bool passed;
  json detail;
};

json assertions_json(const std::vector<Assertion>& a) {
  json j = json::array();
  for (const auto& x : a) j.push_back({{"name", x.name}, {"passed", x.passed}, {"detail", x.detail}});
  return j;
}

Vector start_point(const ExperimentConfig& cfg, int d) {
  if (cfg.x0.empty()) return Vector::Zero(d);
  return Eigen::Map<const Vector>(cfg.x0.data(), d);
}

std::string csv_of_series(const json& series) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,time,w1,std_error,method,projections,n_samples,n_reference\n";
  for (const auto& r : series)
    os << r["iteration"].get<std::uint64_t>() << ',' << r["time"].get<double>() << ',' << r["w1"].get<double>()
       << ',' << r["std_error"].get<double>() << ',' << r["method"].get<std::string>() << ','
       << r["projections"].get<int>() << ',' << r["n_samples"].get<std::size_t>() << ','
       << r["n_reference"].get<std::size_t>() << '\n';
  return os.str();
}

struct Body {
  json plan;
  json results;
  std::vector<Assertion> assertions;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> csv;  // suffix, content
};

// ---- od / ud sampling ----

Body run_sampler(const ExperimentConfig& cfg, const Potential& U) {
  Body b;
  const int d = U.dim();
  const auto& o = cfg.overrides;
  const double scale = o.practical_scale.value_or(1.0);
  const bool od = cfg.sampler == "od";
  SamplerPlan theorem = od ? plan_overdamped(U, cfg.epsilon, d, scale) : plan_underdamped(U, cfg.epsilon, d, scale);

  SamplerPlan plan = theorem;
  if (o.delta || o.n) {
    if (!o.n && !(theorem.feasible && theorem.n <= 9007199254740992.0)) {
      plan.feasible = false;
      plan.note = "overrides.delta given without overrides.n and the planned n is not representable";
    } else {
      const double delta = o.delta.value_or(theorem.delta);
      const std::uint64_t n = o.n ? *o.n : static_cast<std::uint64_t>(std::ceil(theorem.n));
      plan = manual_plan(cfg.sampler, delta, n);
      plan.epsilon = cfg.epsilon;
    }
  }
  if (!od && o.friction_c) plan.friction_c = *o.friction_c;
  b.plan = plan.to_json();
  b.plan["theorem"] = theorem.to_json();
  b.plan["mode"] = (o.delta || o.n) ? "manual" : (scale < 1.0 ? "practical" : "theorem");

  if (!plan.feasible) {
    b.results = {{"status", "infeasible"}, {"note", plan.note}};
    b.warnings.push_back("plan infeasible; nothing was simulated");
    return b;
  }
  if (plan.n > 9007199254740992.0) {
    b.results = {{"status", "infeasible"}, {"note", "iteration count exceeds 2^53"}};
    b.warnings.push_back("iteration count exceeds 2^53; nothing was simulated");
    return b;
  }
  const std::uint64_t steps = plan.steps();
  const std::uint64_t budget = o.max_steps.value_or(10000000ull);
  if (steps > budget) {
    b.results = {{"status", "over-budget"}, {"steps", steps}, {"max_steps", budget}};
    b.warnings.push_back("plan needs " + std::to_string(steps) + " steps, above overrides.max_steps = " +
                         std::to_string(budget) + "; nothing was simulated");
    return b;
  }

  const Vector x0 = start_point(cfg, d);
  for (auto& w : start_warnings(U, x0)) b.warnings.push_back(w);

  Matrix ref;
  std::string ref_source;
  if (!cfg.reference.empty()) {
    ref = load_samples_csv(cfg.reference);
    if (ref.cols() != d) throw UsageError("config: reference: sample dimension does not match the potential");
    ref_source = "file";
  } else if (U.has_exact_sampler()) {
    const std::uint64_t n_ref =
        o.reference_size.value_or(std::min<std::uint64_t>(1000000, std::max<std::uint64_t>(10 * cfg.ensemble, 20000)));
    ref = sample_target(U, n_ref, RngStream::mix(cfg.seed + 7));
    ref_source = "exact-sampler";
  } else {
    b.warnings.push_back("no exact sampler and no reference file; distance series skipped");
  }

  const int projections = o.projections.value_or(d == 1 ? 1 : 128);
  const int resamples = o.resamples.value_or(20);
  std::optional<SlicedReference> sref;
  if (ref.rows() > 0) sref.emplace(ref, projections, RngStream::mix(cfg.seed + 3));

  const int K = o.checkpoints.value_or(20);
  json series = json::array();
  auto record = [&](std::uint64_t it, const Matrix& X) {
    if (!sref) return;
    auto est = sref->distance(X, resamples, RngStream::mix(cfg.seed + 11 + it));
    series.push_back({{"iteration", it},
                      {"time", static_cast<double>(it) * plan.delta},
                      {"w1", est.value},
                      {"std_error", est.std_error},
                      {"method", to_string(est.method)},
                      {"projections", est.projections},
                      {"n_samples", est.n_a},
                      {"n_reference", est.n_b}});
  };

  Matrix final_x;
  std::uint64_t clamped = 0;
  auto drive = [&](auto& ens, auto advance) {
    std::uint64_t done = 0;
    record(0, ens.positions());
    for (int j = 1; j <= K; ++j) {
      const auto target = static_cast<std::uint64_t>(std::llround(static_cast<double>(steps) * j / K));
      if (target <= done) continue;
      advance(target - done);
      done = target;
      record(done, ens.positions());
    }
    final_x = ens.positions();
  };
  if (od) {
    OdEnsemble ens(U, x0, cfg.ensemble, cfg.seed);
    drive(ens, [&](std::uint64_t s) { ens.advance(plan.delta, s); });
  } else {
    UdEnsemble ens(U, x0, Vector::Zero(d), cfg.ensemble, cfg.seed, plan.friction_c);
    drive(ens, [&](std::uint64_t s) { ens.advance(plan.delta, s); });
    clamped = ens.clamped_steps();
    if (clamped) b.warnings.push_back(std::to_string(clamped) + " kernel steps used the series branch");
  }

  const auto moment = second_moment_check(final_x, U);
  b.results = {{"status", "ok"}, {"steps", steps}, {"ensemble", cfg.ensemble},
               {"reference", ref_source}, {"reference_size", ref.rows()}, {"series", series},
               {"second_moment", moment.to_json()}};
  if (!series.empty()) {
    const auto& last = series.back();
    const double w = last["w1"].get<double>(), se = last["std_error"].get<double>();
    b.assertions.push_back({"final_sliced_w1_within_epsilon", w <= cfg.epsilon + 3.0 * se,
                            {{"w1", w}, {"std_error", se}, {"epsilon", cfg.epsilon}}});
    b.csv.emplace_back(".series.csv", csv_of_series(series));
  }
  b.assertions.push_back({"second_moment_bound", moment.passed, moment.to_json()});
  return b;
}

// ---- couplings ----

Body run_coupled_od(const ExperimentConfig& cfg, const Potential& U) {
  Body b;
  const auto& o = cfg.overrides;
  OdCouplingConfig c;
  c.x0 = start_point(cfg, U.dim());
  c.pairs = cfg.ensemble;
  c.substep = o.substep.value_or(0.01);
  c.horizon = o.horizon.value_or(10.0);
  const double total = c.horizon / c.substep;
  c.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(total / o.checkpoints.value_or(100)));
  c.seed = cfg.seed;
  const auto r = run_od_coupling(U, c);
  b.results = r.to_json();
  b.results["pairs"] = c.pairs;
  b.results["estimator"] = "ensemble-mean";
  b.assertions.push_back({"no_split_after_merge", r.merged_then_split == 0, {{"count", r.merged_then_split}}});
  if (r.fit_points >= 2) {
    b.assertions.push_back({"contraction_at_least_half_predicted", -r.slope >= 0.5 * r.predicted_rate,
                            {{"slope", r.slope}, {"predicted_rate", r.predicted_rate}, {"fit_points", r.fit_points}}});
  } else {
    b.warnings.push_back("fewer than two points above the fit cutoff; no rate assertion");
  }
  std::ostringstream os;
  os.precision(17);
  os << "t,mean_f,se_f,merged_fraction\n";
  for (std::size_t i = 0; i < r.times.size(); ++i)
    os << r.times[i] << ',' << r.mean_f[i] << ',' << r.se_f[i] << ',' << r.merged_fraction[i] << '\n';
  b.csv.emplace_back(".coupling.csv", os.str());
  return b;
}

Body run_coupled_ud(const ExperimentConfig& cfg, const Potential& U) {
  Body b;
  const auto& o = cfg.overrides;
  const int d = U.dim();
  UdCouplingConfig c;
  c.c = o.friction_c.value_or(kFrictionC);
  c.delta = o.delta.value_or(0.1);
  const double sub = o.substep.value_or(c.delta / 20.0);
  const double ratio = c.delta / sub;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || ratio < 1)
    throw UsageError("config: overrides.substep: must divide delta");
  c.substeps = static_cast<int>(std::round(ratio));
  c.horizon = o.horizon.value_or(300.0);
  c.trajectories = cfg.ensemble;
  const double total = c.horizon / sub;
  c.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(total / o.checkpoints.value_or(200)));
  if (cfg.starts.empty()) c.starts.push_back(start_point(cfg, d));
  for (const auto& s : cfg.starts) c.starts.push_back(Eigen::Map<const Vector>(s.data(), d));
  c.seed = cfg.seed;

  const auto k = CouplingConstants::from(U, c.c);
  if (c.horizon < k.t_sync)
    b.warnings.push_back("horizon is shorter than T_sync = " + std::to_string(k.t_sync) +
                         "; no switch to reflection can occur");
  const auto r = run_ud_coupling(U, c);
  b.results = r.to_json();
  b.results["trajectories"] = c.trajectories;
  b.results["estimator"] = "ensemble-mean";
  b.results["delta"] = c.delta;
  b.results["substep"] = sub;
  b.assertions.push_back({"jump_nonpositive", r.violations.empty(), {{"violations", r.violations.size()}}});
  b.assertions.push_back({"reflection_inside_ball", !(r.max_ball_excess > r.ball_slack),
                          {{"max_excess", std::isfinite(r.max_ball_excess) ? json(r.max_ball_excess) : json(nullptr)},
                           {"slack", r.ball_slack}}});
  b.assertions.push_back({"xi_invariants", r.xi_monotone_failures == 0 && r.xi_reset_failures == 0,
                          {{"monotone_failures", r.xi_monotone_failures}, {"reset_failures", r.xi_reset_failures}}});
  b.assertions.push_back({"wf_sandwich", r.sandwich_failures == 0, {{"failures", r.sandwich_failures}}});
  b.assertions.push_back({"lyapunov_monotone_within_floor", r.monotone_within_floor,
                          {{"max_increase", r.max_increase}, {"floor", r.floor}, {"z", r.max_increase_z}}});
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  b.csv.emplace_back(".trace.csv", os.str());
  std::ostringstream ms;
  ms.precision(17);
  ms << "t,mean_L,se_L,mu_fraction\n";
  for (std::size_t i = 0; i < r.times.size(); ++i)
    ms << r.times[i] << ',' << r.mean_L[i] << ',' << r.se_L[i] << ',' << r.mu_fraction[i] << '\n';
  b.csv.emplace_back(".lyapunov.csv", ms.str());
  return b;
}

// ---- step-size sweeps ----

Body run_sweep(const ExperimentConfig& cfg, const Potential& U) {
  Body b;
  const auto& o = cfg.overrides;
  const Vector x0 = start_point(cfg, U.dim());
  ScalingReport r;
  double lo, hi;
  if (cfg.sampler == "discretization-od") {
    std::vector<double> deltas;
    if (o.deltas) deltas = *o.deltas;
    else
      for (int j = 9; j <= 16; ++j) deltas.push_back(std::ldexp(1.0, -j));
    r = od_discretization_sweep(U, x0, deltas, cfg.ensemble, cfg.seed);
    lo = 2.7;
    hi = 3.3;
  } else {
    const double c = o.friction_c.value_or(kFrictionC);
    const double top = 1.0 / (12000.0 * U.kappa());
    const auto deltas = o.deltas.value_or(geometric_grid(top, top / 100.0, 5));
    r = ud_freeze_sweep(U, x0, deltas, o.horizon.value_or(0.01), cfg.ensemble, cfg.seed, c);
    lo = 1.7;
    hi = 2.3;
  }
  b.results = r.to_json();
  b.results["estimator"] = "ensemble-mean";
  for (auto& w : r.warnings) b.warnings.push_back(w);
  if (r.status == "ok") {
    b.assertions.push_back({"slope_in_range", r.slope >= lo && r.slope <= hi,
                            {{"slope", r.slope}, {"low", lo}, {"high", hi}}});
  } else {
    b.warnings.push_back("sweep status " + r.status + "; no slope assertion");
  }
  if (!r.bounds.empty()) b.assertions.push_back({"below_bound", r.all_below_bound(), json::object()});
  std::ostringstream os;
  r.write_csv(os);
  b.csv.emplace_back(".sweep.csv", os.str());
  return b;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

json without_timing(json report) {
  report.erase("timing");
  return report;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, bool write) {
  cfg.validate();
  const auto started = utc_now();
  const auto t0 = Clock::now();
  const auto U = make_potential(cfg.potential);

  Body b;
  if (cfg.sampler == "od" || cfg.sampler == "ud") b = run_sampler(cfg, *U);
  else if (cfg.sampler == "coupled-od") b = run_coupled_od(cfg, *U);
  else if (cfg.sampler == "coupled-ud") b = run_coupled_ud(cfg, *U);
  else b = run_sweep(cfg, *U);

  bool passed = true;
  for (const auto& a : b.assertions) passed = passed && a.passed;

  RunOutcome out;
  auto& rep = out.report;
  rep["report_version"] = 1;
  rep["software"] = {{"name", "lmc"}, {"version", software_version()}};
  rep["experiment"] = cfg.sampler;
  rep["config"] = cfg.to_json();
  rep["potential"] = {{"spec", U->spec()}, {"L", U->L()}, {"m", U->m()}, {"R", U->R()}, {"dim", U->dim()}};
  if (!b.plan.is_null()) rep["plan"] = b.plan;
  rep["results"] = b.results;
  rep["assertions"] = assertions_json(b.assertions);
  rep["warnings"] = b.warnings;
  rep["passed"] = passed;
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  rep["timing"] = {{"started_utc", started}, {"wall_seconds", wall}};
  out.exit_code = passed ? 0 : 2;

  if (write) {
    const auto dir = cfg.output_dir.empty() ? default_output_dir() : std::filesystem::path(cfg.output_dir);
    for (const auto& [suffix, content] : b.csv) {
      const auto p = dir / (cfg.name + suffix);
      atomic_write(p, content);
      out.files.push_back(p);
    }
    const auto p = dir / (cfg.name + ".report.json");
    atomic_write(p, rep.dump(2) + "\n");
    out.files.push_back(p);
  }
  return out;
}

}  // namespace lmc
