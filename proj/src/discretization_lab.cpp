#include "lmc/discretization_lab.hpp"

#include <ostream>

namespace lmc {

namespace {

void check_grid(const std::vector<double>& deltas, const char* op) {
  if (deltas.empty()) throw UsageError(std::string(op) + ": empty step-size grid");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0) || !std::isfinite(deltas[i])) throw DomainError(std::string(op) + ": step sizes must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw UsageError(std::string(op) + ": step sizes must be strictly decreasing");
  }
}

void grid_warnings(ScalingReport& r) {
  if (r.deltas.size() < 5) r.warnings.push_back("fewer than 5 grid points");
  if (r.deltas.size() >= 2 && r.deltas.front() / r.deltas.back() < 100.0 * (1 - 1e-12))
    r.warnings.push_back("grid spans less than 2 decades");
}

}  // namespace

bool ScalingReport::all_below_bound() const {
  if (bounds.size() != errors.size()) return false;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!(errors[i] <= bounds[i])) return false;
  return true;
}

json ScalingReport::to_json() const {
  json j{{"kind", kind},           {"deltas", deltas},     {"errors", errors}, {"std_errors", std_errors},
         {"status", status},       {"warnings", warnings}, {"ensemble", ensemble}};
  j["slope"] = std::isfinite(slope) ? json(slope) : json(nullptr);
  j["intercept"] = std::isfinite(intercept) ? json(intercept) : json(nullptr);
  if (!bounds.empty()) {
    j["bounds"] = bounds;
    j["all_below_bound"] = all_below_bound();
  }
  return j;
}

void ScalingReport::write_csv(std::ostream& os) const {
  os << "delta,error,std_error" << (bounds.empty() ? "" : ",bound") << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    os << deltas[i] << ',' << errors[i] << ',' << std_errors[i];
    if (!bounds.empty()) os << ',' << bounds[i];
    os << '\n';
  }
}

void fit_loglog(ScalingReport& r) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.deltas.size(); ++i) {
    if (!(r.errors[i] > 0)) continue;
    lx.push_back(std::log(r.deltas[i]));
    ly.push_back(std::log(r.errors[i]));
  }
  if (lx.size() < 2) {
    r.status = "insufficient-points";
    r.slope = r.intercept = NAN;
    return;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.status = "ok";
}

std::vector<double> geometric_grid(double hi, double lo, int n) {
  require(n >= 1 && hi > 0 && lo > 0 && lo <= hi, "geometric_grid: bad range");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? hi : hi * std::pow(lo / hi, static_cast<double>(i) / (n - 1));
  return g;
}

ScalingReport od_discretization_sweep(const Potential& U, const Vector& x0, const std::vector<double>& deltas,
                                      std::size_t ensemble, std::uint64_t seed, const OdSweepOptions& opt) {
  const int d = U.dim();
  if (x0.size() != d) throw UsageError("od_discretization_sweep: x0 dimension mismatch");
  check_grid(deltas, "od_discretization_sweep");
  require(ensemble >= 1, "od_discretization_sweep: ensemble must be >= 1");
  require(opt.ref_substeps >= 1, "od_discretization_sweep: ref_substeps must be >= 1");
  const int path = opt.path_resolution > 0 ? opt.path_resolution : opt.ref_substeps;
  require(path % opt.ref_substeps == 0, "od_discretization_sweep: path_resolution must be a multiple of ref_substeps");
  const int group = path / opt.ref_substeps;

  ScalingReport r;
  r.kind = "od-one-step";
  r.deltas = deltas;
  r.ensemble = ensemble;
  if (x0.norm() > U.R()) r.warnings.push_back("precondition: |x0| exceeds R");
  const double cap = U.m() / (512.0 * U.L() * U.L());
  for (double delta : deltas)
    if (delta > cap * (1 + 1e-12)) {
      r.warnings.push_back("precondition: delta " + std::to_string(delta) + " exceeds m/(512 L^2)");
      break;
    }
  grid_warnings(r);

  const bool noisy = opt.noise == Noise::on;
  for (std::size_t g = 0; g < deltas.size(); ++g) {
    const double delta = deltas[g], h = delta / opt.ref_substeps, hp = delta / path;
    std::vector<double> err(ensemble);
    parallel_for(ensemble, [&](std::size_t i) {
      RngStream rng(RngStream::mix(seed + g), i);
      Vector x = x0, grad(d), dB(d), total = Vector::Zero(d), piece(d);
      for (int k = 0; k < opt.ref_substeps; ++k) {
        dB.setZero();
        if (noisy)
          for (int j = 0; j < group; ++j) {
            rng.fill_gaussian(piece);
            dB += std::sqrt(hp) * piece;
          }
        checked_gradient(U, x, grad);
        x += -h * grad + std::sqrt(2.0) * dB;
        total += dB;
      }
      checked_gradient(U, x0, grad);
      const Vector one = x0 - delta * grad + std::sqrt(2.0) * total;
      err[i] = (one - x).squaredNorm();
    });
    const auto ms = mean_se(err);
    r.errors.push_back(ms.mean);
    r.std_errors.push_back(ms.std_error);
  }
  fit_loglog(r);
  return r;
}

json FreezeCheck::to_json() const {
  return {{"delta", delta}, {"observed", observed}, {"std_error", std_error}, {"bound", bound},
          {"ratio", ratio}, {"precondition_ok", precondition_ok}, {"passed", passed}};
}

FreezeCheck ud_freeze_error(const Potential& U, const Vector& x0, double delta, double horizon,
                            std::size_t ensemble, std::uint64_t seed, double c) {
  const int d = U.dim();
  if (x0.size() != d) throw UsageError("ud_freeze_error: x0 dimension mismatch");
  if (!(delta > 0) || !(horizon > 0)) throw DomainError("ud_freeze_error: delta and horizon must be positive");
  require(ensemble >= 1, "ud_freeze_error: ensemble must be >= 1");
  const double k = 1.0 / (c * U.kappa() * U.L());
  const auto kc = kernel_coefficients(delta, k);
  const auto steps = static_cast<std::uint64_t>(std::max(1.0, std::round(horizon / delta)));

  std::vector<double> per(ensemble);
  parallel_for(ensemble, [&](std::size_t i) {
    PhaseState s{x0, Vector::Zero(d), 0, RngStream(seed, i), 0};
    RngStream side(RngStream::mix(seed) ^ 0x66726565ull, i);  // intermediate-time draws
    Vector g0(d), gs(d), xs(d);
    std::vector<double> acc(steps);
    for (std::uint64_t n = 0; n < steps; ++n) {
      checked_gradient(U, s.x, g0);
      // x at a uniform time inside the step, drawn from the same frozen-gradient kernel
      const auto ks = kernel_coefficients(delta * side.uniform(), k);
      for (int j = 0; j < d; ++j) {
        const double z1 = side.gaussian();
        xs(j) = s.x(j) + 0.5 * ks.a * s.u(j) - 0.5 * k * ks.b * g0(j) + ks.l11 * z1;
      }
      checked_gradient(U, xs, gs);
      acc[n] = (gs - g0).squaredNorm();
      ud_step(U, s, kc, g0);
    }
    per[i] = pairwise_sum(acc) / static_cast<double>(steps);
  });
  const auto ms = mean_se(per);
  FreezeCheck f;
  f.delta = delta;
  f.observed = ms.mean;
  f.std_error = ms.std_error;
  const double R = U.R(), L = U.L();
  f.bound = 1e9 * L * L * delta * delta * (R * R + d / U.m());
  f.ratio = f.observed / f.bound;
  f.precondition_ok = delta <= 1.0 / (12000.0 * U.kappa()) * (1 + 1e-12);
  f.passed = f.observed <= f.bound;
  return f;
}

FreezeCheck ud_velocity_moment_check(const Potential& U, const UnderdampedPlan& plan, double horizon,
                                     std::size_t ensemble, std::uint64_t seed) {
  require(plan.sampler == "ud", "ud_velocity_moment_check: needs an underdamped plan");
  return ud_freeze_error(U, Vector::Zero(U.dim()), plan.delta, horizon, ensemble, seed, plan.friction_c);
}

ScalingReport ud_freeze_sweep(const Potential& U, const Vector& x0, const std::vector<double>& deltas,
                              double horizon, std::size_t ensemble, std::uint64_t seed, double c) {
  check_grid(deltas, "ud_freeze_sweep");
  ScalingReport r;
  r.kind = "ud-gradient-freeze";
  r.deltas = deltas;
  r.ensemble = ensemble;
  if (x0.norm() > U.R()) r.warnings.push_back("precondition: |x0| exceeds R");
  grid_warnings(r);
  bool warned = false;
  for (std::size_t g = 0; g < deltas.size(); ++g) {
    auto f = ud_freeze_error(U, x0, deltas[g], horizon, ensemble, RngStream::mix(seed + g), c);
    if (!f.precondition_ok && !warned) {
      r.warnings.push_back("precondition: delta exceeds 1/(12000 kappa)");
      warned = true;
    }
    r.errors.push_back(f.observed);
    r.std_errors.push_back(f.std_error);
    r.bounds.push_back(f.bound);
  }
  fit_loglog(r);
  return r;
}

}  // namespace lmc
