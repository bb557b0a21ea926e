#include "lmc/coupling_sim.hpp"

#include <ostream>

namespace lmc {

namespace {

double merge_tolerance(const Potential& U) { return 1e-9 * (U.R() > 0 ? U.R() : 1.0); }

bool params_match(const DistanceFnParams& a, const DistanceFnParams& b) {
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); };
  return close(a.alpha_f, b.alpha_f) && close(a.r_f, b.r_f);
}

std::optional<JumpViolation> jump_violation(const CouplingState& s, const DistanceFn& fn, const CouplingConstants& k,
                                            double tol_rel) {
  const double f_rho = fn.f(s.rho);
  const double lhs = fn.f(s.reflection_arg(k));
  const double rhs = f_rho * std::exp(-k.c_sync * k.t_sync) + s.xi;
  if (lhs <= rhs + tol_rel * f_rho) return std::nullopt;
  return JumpViolation{0, s.time, lhs, rhs};
}

}  // namespace

void od_coupled_step(const Potential& U, OdCoupledPair& p, RngStream& rng, OdCouplingWorkspace& ws, bool bridge) {
  const double h = p.substep;
  if (!(h > 0) || !std::isfinite(h)) throw DomainError("od_coupled_step: substep must be positive");
  const int d = U.dim();
  ws.gx.resize(d);
  ws.gy.resize(d);
  ws.noise.resize(d);
  checked_gradient(U, p.x, ws.gx);
  rng.fill_gaussian(ws.noise);
  ws.noise *= std::sqrt(h);
  const double s2 = std::sqrt(2.0);
  p.time += h;
  if (p.merged) {
    p.x += -h * ws.gx + s2 * ws.noise;
    p.y = p.x;
    return;
  }
  checked_gradient(U, p.y, ws.gy);
  Vector z = p.x - p.y;
  const double r = z.norm();
  p.x += -h * ws.gx + s2 * ws.noise;
  if (r > 0) {
    z /= r;  // γ
    ws.noise -= 2.0 * z.dot(ws.noise) * z;
  }
  p.y += -h * ws.gy + s2 * ws.noise;

  const Vector zn = p.x - p.y;
  bool merge = zn.norm() < merge_tolerance(U);
  if (!merge && r > 0) {
    const double s = zn.dot(z);
    merge = s <= 0.0 || (bridge && rng.uniform() < std::exp(-r * s / (4.0 * h)));
  }
  if (merge) {
    p.y = p.x;
    p.merged = true;
  }
}

CouplingConstants CouplingConstants::from(const Potential& U, double c) {
  if (!(c > 0) || !std::isfinite(c)) throw UsageError("coupling constants: c must be positive");
  CouplingConstants k;
  k.c = c;
  k.kappa = U.kappa();
  k.L = U.L();
  k.R = U.R();
  const double ck = k.ck(), e = std::exp(-11.0 * k.L * k.R * k.R / 4.0);
  k.t_sync = 3.0 * ck * ck * std::log(10.0);
  k.c_sync = e / (600.0 * ck * ck * std::log(10.0));
  const double lr2 = k.L * k.R * k.R;
  k.c_ref = std::min(lr2 > 0 ? e / (1375.0 * k.kappa * lr2) : INFINITY, e / (4.0 * ck));
  return k;
}

json CouplingConstants::to_json() const {
  return {{"c", c}, {"kappa", kappa}, {"L", L}, {"R", R}, {"t_sync", t_sync}, {"c_sync", c_sync}, {"c_ref", c_ref}};
}

double CouplingState::ball_norm() const {
  const Vector zz = x - y;
  return std::sqrt(zz.squaredNorm() + (zz + u - v).squaredNorm());
}

double CouplingState::reflection_arg(const CouplingConstants& k) const {
  const Vector zz = x - y;
  return (1.0 + 2.0 / k.ck()) * zz.norm() + (zz + u - v).norm();
}

CouplingState init_coupling_state(const Potential& U, Vector x, Vector u, Vector y, Vector v,
                                  const CouplingConstants& k) {
  const int d = U.dim();
  if (x.size() != d || u.size() != d || y.size() != d || v.size() != d)
    throw UsageError("init_coupling_state: dimension mismatch");
  CouplingState s;
  s.x = std::move(x);
  s.u = std::move(u);
  s.y = std::move(y);
  s.v = std::move(v);
  const bool inside = s.ball_norm() < std::sqrt(5.0) * k.R;
  s.tau = inside ? -k.t_sync : 0.0;
  s.mu = inside ? 1 : 0;
  s.rho = s.reflection_arg(k);
  s.anchor_grad.resize(d);
  checked_gradient(U, s.x, s.anchor_grad);
  return s;
}

CouplingEvent ud_coupled_step(const Potential& U, CouplingState& s, const CouplingConstants& k, double delta,
                              double substep, RngStream& rng, CouplingWorkspace& ws) {
  if (!(substep > 0) || !(delta > 0)) throw UsageError("ud_coupled_step: delta and substep must be positive");
  const double ratio = delta / substep;
  const auto n_sub = static_cast<std::uint64_t>(std::llround(ratio));
  if (n_sub < 1 || std::abs(ratio - static_cast<double>(n_sub)) > 1e-9 * ratio)
    throw UsageError("ud_coupled_step: substep must divide delta");
  const int d = U.dim();
  ws.gx.resize(d);
  ws.gy.resize(d);
  ws.noise.resize(d);
  const double h = substep;

  if (s.step % n_sub == 0) {
    checked_gradient(U, s.x, s.anchor_grad);
    ws.gx = s.anchor_grad;
  } else {
    checked_gradient(U, s.x, ws.gx);
  }
  checked_gradient(U, s.y, ws.gy);

  const double kk = 1.0 / (k.ck() * k.L);
  const double sigma = 2.0 * std::sqrt(kk);
  rng.fill_gaussian(ws.noise);
  ws.noise *= std::sqrt(h);

  // Reflection direction from the pre-step state; γ = 0 on the degenerate set.
  ws.phi = s.x - s.y + s.u - s.v;
  const double pn = ws.phi.norm();
  const bool reflect = s.mu == 1 && pn > 1e-12 * std::max(k.R, 1.0);

  s.x += h * s.u;
  s.u += h * (-2.0 * s.u - kk * s.anchor_grad) + sigma * ws.noise;
  if (reflect) {
    ws.phi /= pn;
    ws.noise -= 2.0 * ws.phi.dot(ws.noise) * ws.phi;
  }
  s.y += h * s.v;
  s.v += h * (-2.0 * s.v - kk * ws.gy) + sigma * ws.noise;

  // ξ: the integrand |∇_s - ∇̃_s| is constant over the substep in this
  // integrator, so the exponential-kernel integral is taken exactly.
  const double D = k.xi_decay_time();
  const double g = (ws.gx - s.anchor_grad).norm();
  s.xi = std::exp(-h / D) * s.xi + 4.0 * kk * g * D * -std::expm1(-h / D);

  ++s.step;
  s.time = static_cast<double>(s.step) * h;

  const double eps = 1e-9 * h;
  CouplingEvent ev = CouplingEvent::none;
  if (s.time >= s.tau + k.t_sync - eps && s.ball_norm() >= std::sqrt(5.0) * k.R) {
    s.tau = s.time;
    s.rho = s.reflection_arg(k);
    s.xi = 0.0;
    ev = CouplingEvent::sync_start;
  }
  const int mu = s.time >= s.tau + k.t_sync - eps ? 1 : 0;
  if (s.mu == 0 && mu == 1) ev = CouplingEvent::to_reflection;
  s.mu = mu;
  return ev;
}

double lyapunov_eval(const CouplingState& s, const DistanceFn& fn, const CouplingConstants& k) {
  if (!params_match(fn.params(), k.fn_params()))
    throw UsageError("lyapunov_eval: distance function must use alpha_f = L/4 and r_f = sqrt(11) R");
  if (s.mu == 1) return fn.f(s.reflection_arg(k));
  return fn.f(s.rho) * std::exp(-k.c_sync * (s.time - s.tau)) + s.xi;
}

std::vector<JumpViolation> check_jump_nonpositive(const std::vector<CouplingState>& trace, const DistanceFn& fn,
                                                  const CouplingConstants& k, double tol_rel) {
  std::vector<JumpViolation> out;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i - 1].mu != 0 || trace[i].mu != 1) continue;
    if (auto v = jump_violation(trace[i], fn, k, tol_rel)) {
      v->index = i;
      out.push_back(*v);
    }
  }
  return out;
}

double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  require(t.size() == y.size() && t.size() >= 2, "fit_slope: need two or more points");
  const double n = static_cast<double>(t.size());
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (y[i] - my);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return sxy / sxx;
}

namespace {

std::uint64_t checkpoint_count(std::uint64_t steps, std::size_t every) { return steps / every + 1; }

MeanSe column_stats(const std::vector<double>& M, std::size_t rows, std::size_t cols, std::size_t j) {
  std::vector<double> col(rows);
  for (std::size_t i = 0; i < rows; ++i) col[i] = M[i * cols + j];
  return mean_se(col);
}

}  // namespace

json OdCouplingResult::to_json() const {
  return {{"times", times},
          {"mean_f", mean_f},
          {"se_f", se_f},
          {"merged_fraction", merged_fraction},
          {"alpha_f", fn.alpha_f},
          {"r_f", fn.r_f},
          {"slope", slope},
          {"fit_points", fit_points},
          {"predicted_rate", predicted_rate},
          {"merged_then_split", merged_then_split}};
}

OdCouplingResult run_od_coupling(const Potential& U, const OdCouplingConfig& cfg) {
  const int d = U.dim();
  if (cfg.x0.size() != d) throw UsageError("run_od_coupling: x0 dimension mismatch");
  require(cfg.pairs >= 1, "run_od_coupling: pairs must be >= 1");
  require(cfg.substep > 0 && cfg.horizon > 0, "run_od_coupling: substep and horizon must be positive");
  require(cfg.record_every >= 1, "run_od_coupling: record_every must be >= 1");
  require(U.R() > 0, "run_od_coupling: potential must declare R > 0");

  OdCouplingResult res;
  res.fn = {U.L() / 4.0, U.R()};
  const DistanceFn fn(res.fn);
  const auto steps = static_cast<std::uint64_t>(std::ceil(cfg.horizon / cfg.substep - 1e-9));
  const std::size_t C = checkpoint_count(steps, cfg.record_every), n = cfg.pairs;
  // y₀ ~ p*; x₀ is a point mass, so the product coupling is the optimal one.
  const Matrix Y0 = sample_target(U, n, RngStream::mix(cfg.seed + 1));

  std::vector<double> F(n * C), merged(n * C);
  std::vector<std::size_t> split(n, 0);
  parallel_for(n, [&](std::size_t i) {
    OdCoupledPair p{cfg.x0, Y0.row(static_cast<Eigen::Index>(i)).transpose(), 0.0, cfg.substep, false};
    RngStream rng(cfg.seed, i);
    OdCouplingWorkspace ws;
    std::size_t c = 0;
    for (std::uint64_t s = 0; s <= steps; ++s) {
      if (s % cfg.record_every == 0) {
        const double r = (p.x - p.y).norm();
        if (p.merged && r > 0) ++split[i];
        F[i * C + c] = fn.f(r);
        merged[i * C + c] = p.merged ? 1.0 : 0.0;
        ++c;
      }
      if (s < steps) od_coupled_step(U, p, rng, ws, cfg.bridge);
    }
  });

  for (std::size_t j = 0; j < C; ++j) {
    const auto st = column_stats(F, n, C, j);
    res.times.push_back(static_cast<double>(j * cfg.record_every) * cfg.substep);
    res.mean_f.push_back(st.mean);
    res.se_f.push_back(st.std_error);
    res.merged_fraction.push_back(column_stats(merged, n, C, j).mean);
  }
  for (auto s : split) res.merged_then_split += s;

  // Fit while E f stays above 1e-3 of its start; beyond that few unmerged pairs remain.
  std::vector<double> ft, fy;
  for (std::size_t j = 0; j < C; ++j) {
    if (!(res.mean_f[j] > 0) || res.mean_f[j] < 1e-3 * res.mean_f[0]) break;
    ft.push_back(res.times[j]);
    fy.push_back(std::log(res.mean_f[j]));
  }
  res.fit_points = ft.size();
  res.slope = ft.size() >= 2 ? fit_slope(ft, fy) : NAN;
  const double R = U.R();
  res.predicted_rate = std::exp(-U.L() * R * R / 4.0) * std::min(4.0 / (R * R), U.m() / 2.0);
  return res;
}

json UdCouplingResult::to_json() const {
  json v = json::array();
  for (const auto& x : violations)
    v.push_back({{"trajectory", x.index}, {"time", x.time}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  return {{"times", times},
          {"mean_L", mean_L},
          {"se_L", se_L},
          {"mu_fraction", mu_fraction},
          {"switches", switches},
          {"sync_starts", sync_starts},
          {"violations", v},
          {"max_ball_excess", max_ball_excess},
          {"ball_slack", ball_slack},
          {"xi_monotone_failures", xi_monotone_failures},
          {"xi_reset_failures", xi_reset_failures},
          {"sandwich_failures", sandwich_failures},
          {"floor", floor},
          {"max_increase", max_increase},
          {"max_increase_z", max_increase_z},
          {"monotone_within_floor", monotone_within_floor},
          {"constants", constants.to_json()}};
}

UdCouplingResult run_ud_coupling(const Potential& U, const UdCouplingConfig& cfg) {
  const int d = U.dim();
  require(!cfg.starts.empty(), "run_ud_coupling: need at least one start point");
  for (const auto& x : cfg.starts)
    if (x.size() != d) throw UsageError("run_ud_coupling: start dimension mismatch");
  require(cfg.trajectories >= 1 && cfg.substeps >= 1 && cfg.record_every >= 1, "run_ud_coupling: bad counts");
  require(cfg.delta > 0 && cfg.horizon > 0, "run_ud_coupling: delta and horizon must be positive");

  UdCouplingResult res;
  const auto k = CouplingConstants::from(U, cfg.c);
  res.constants = k;
  const DistanceFn fn(k.fn_params());
  const double h = cfg.delta / cfg.substeps;
  const auto steps = static_cast<std::uint64_t>(std::ceil(cfg.horizon / h - 1e-9));
  const std::size_t C = checkpoint_count(steps, cfg.record_every), n = cfg.trajectories;
  const double kk = 1.0 / (k.ck() * k.L);
  const double sandwich = std::exp(-11.0 * k.L * k.R * k.R / 4.0) / 5.0;
  const double ball = std::sqrt(5.0) * k.R;
  const double xi_decay = std::exp(-h / k.xi_decay_time());
  const Matrix Y0 = sample_target(U, n, RngStream::mix(cfg.seed + 1));

  struct PerTrajectory {
    std::size_t switches = 0, sync_starts = 0, xi_mono = 0, xi_reset = 0, sandwich = 0;
    double ball_excess = -INFINITY, slack = 0.0;
    std::vector<JumpViolation> violations;
    std::vector<TraceRow> trace;
  };
  std::vector<PerTrajectory> per(n);
  std::vector<double> Lv(n * C), Mu(n * C);

  parallel_for(n, [&](std::size_t i) {
    auto& out = per[i];
    RngStream rng(cfg.seed, i);
    Vector v0(d);
    rng.fill_gaussian(v0);
    v0 *= std::sqrt(kk);
    auto s = init_coupling_state(U, cfg.starts[i % cfg.starts.size()], Vector::Zero(d),
                                 Y0.row(static_cast<Eigen::Index>(i)).transpose(), v0, k);
    CouplingWorkspace ws;
    std::size_t c = 0;
    for (std::uint64_t step = 0;; ++step) {
      if (step % cfg.record_every == 0) {
        const double L = lyapunov_eval(s, fn, k);
        Lv[i * C + c] = L;
        Mu[i * C + c] = s.mu;
        const double zn = s.z().norm(), wn = s.w().norm();
        if (L < sandwich * (zn + wn) * (1.0 - 1e-12)) ++out.sandwich;
        if (i < cfg.traced) out.trace.push_back({i, s.time, zn, wn, s.mu, s.tau, s.rho, s.xi, L});
        ++c;
      }
      if (step == steps) break;
      const double xi_before = s.xi;
      const auto ev = ud_coupled_step(U, s, k, cfg.delta, h, rng, ws);
      if (ev == CouplingEvent::sync_start) {
        ++out.sync_starts;
        if (s.xi != 0.0) ++out.xi_reset;
      } else if (s.xi < xi_decay * xi_before * (1.0 - 1e-14)) {
        ++out.xi_mono;
      }
      if (ev == CouplingEvent::to_reflection) {
        ++out.switches;
        if (auto v = jump_violation(s, fn, k, cfg.jump_tol_rel)) {
          v->index = i;
          out.violations.push_back(*v);
        }
      }
      if (s.mu == 1) out.ball_excess = std::max(out.ball_excess, s.ball_norm() - ball);
      // drift of (z, z + w) over the step that was just taken
      const Vector w = s.w();
      const double drift = w.norm() + (-w - kk * (s.anchor_grad - ws.gy)).norm();
      out.slack = std::max(out.slack, h * drift);
    }
  });

  for (std::size_t j = 0; j < C; ++j) {
    const auto st = column_stats(Lv, n, C, j);
    res.times.push_back(static_cast<double>(j * cfg.record_every) * h);
    res.mean_L.push_back(st.mean);
    res.se_L.push_back(st.std_error);
    res.mu_fraction.push_back(column_stats(Mu, n, C, j).mean);
  }
  for (auto& p : per) {
    res.switches += p.switches;
    res.sync_starts += p.sync_starts;
    res.xi_monotone_failures += p.xi_mono;
    res.xi_reset_failures += p.xi_reset;
    res.sandwich_failures += p.sandwich;
    res.max_ball_excess = std::max(res.max_ball_excess, p.ball_excess);
    res.ball_slack = std::max(res.ball_slack, p.slack);
    res.violations.insert(res.violations.end(), p.violations.begin(), p.violations.end());
    res.trace.insert(res.trace.end(), p.trace.begin(), p.trace.end());
  }

  const double R = k.R;
  res.floor = 200.0 * cfg.delta * std::sqrt(R * R + d / U.m()) / k.kappa;
  std::size_t best = 0;
  for (std::size_t j = 1; j < C; ++j) {
    const double inc = res.mean_L[j] - res.mean_L[best];
    const double se = std::hypot(res.se_L[j], res.se_L[best]);
    if (inc > res.max_increase) {
      res.max_increase = inc;
      res.max_increase_z = se > 0 ? inc / se : INFINITY;
    }
    if (inc > res.floor + 3.0 * se) res.monotone_within_floor = false;
    if (res.mean_L[j] < res.mean_L[best]) best = j;
  }
  return res;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "trajectory,t,z_norm,w_norm,mu,tau,rho,xi,lyapunov\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.trajectory << ',' << r.t << ',' << r.z << ',' << r.w << ',' << r.mu << ',' << r.tau << ',' << r.rho
       << ',' << r.xi << ',' << r.lyapunov << '\n';
}

}  // namespace lmc
