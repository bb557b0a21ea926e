#include "lmc/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace lmc {

std::string to_string(DistanceMethod m) {
  switch (m) {
    case DistanceMethod::exact_1d: return "exact-1d";
    case DistanceMethod::sliced: return "sliced";
    case DistanceMethod::monotone_upper_bound: return "monotone-upper-bound";
  }
  return "unknown";
}

json DistanceEstimate::to_json() const {
  json j{{"value", value}, {"method", to_string(method)}, {"std_error", std_error},
         {"resamples", resamples}, {"n_a", n_a}, {"n_b", n_b}};
  if (method == DistanceMethod::sliced) j["projections"] = projections;
  if (lower) j["lower"] = *lower;
  if (upper) j["upper"] = *upper;
  return j;
}

json MomentCheck::to_json() const {
  return {{"mean_sq", mean_sq}, {"std_error", std_error}, {"bound", bound},
          {"margin", margin},   {"passed", passed},       {"n", n}};
}

void check_measure(const EmpiricalMeasure& a, const char* name) {
  if (a.rows() < 1 || a.cols() < 1) throw UsageError(std::string(name) + ": empirical measure is empty");
  if (!a.allFinite()) throw DomainError(std::string(name) + ": non-finite sample");
}

namespace {

std::vector<double> sorted_column(const EmpiricalMeasure& a) {
  std::vector<double> v(a.data(), a.data() + a.rows());
  std::sort(v.begin(), v.end());
  return v;
}

void check_1d_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const char* op) {
  check_measure(a, op);
  check_measure(b, op);
  if (a.cols() != 1 || b.cols() != 1) throw UsageError(std::string(op) + ": measures must be 1-dimensional");
  if (a.rows() != b.rows())
    throw UsageError(std::string(op) + ": unequal sample counts (resample before calling)");
}

std::vector<std::uint32_t> multinomial_counts(std::size_t n, RngStream& rng) {
  std::vector<std::uint32_t> c(n, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) ++c[pick(rng.engine())];
  return c;
}

double stddev(const std::vector<double>& v) { return v.size() > 1 ? std::sqrt(mean_se(v).variance) : 0.0; }

// Tag separating bootstrap streams from direction streams.
constexpr std::uint64_t kBootTag = 0x626f6f74ull << 32;

struct SortedProjection {
  std::vector<double> x;
  std::vector<std::uint32_t> perm;  // x[k] = projection of sample perm[k]
};

SortedProjection project_sorted(const EmpiricalMeasure& a, const Vector& dir) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  std::vector<std::pair<double, std::uint32_t>> raw(n);
  Vector proj = a * dir;
  for (std::size_t i = 0; i < n; ++i) raw[i] = {proj(static_cast<Eigen::Index>(i)), static_cast<std::uint32_t>(i)};
  std::sort(raw.begin(), raw.end());
  SortedProjection s;
  s.x.resize(n);
  s.perm.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.x[k] = raw[k].first;
    s.perm[k] = raw[k].second;
  }
  return s;
}

std::vector<double> permuted_weights(const SortedProjection& s, const std::vector<std::uint32_t>& counts) {
  std::vector<double> w(s.perm.size());
  const double n = static_cast<double>(s.perm.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = counts[s.perm[k]] / n;
  return w;
}

}  // namespace

double w1_sorted(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return pairwise_sum(d) / static_cast<double>(a.size());
}

double w2_sorted(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(pairwise_sum(d) / static_cast<double>(a.size()));
}

double w1_weighted(std::span<const double> xa, std::span<const double> wa, std::span<const double> xb,
                   std::span<const double> wb) {
  std::size_t i = 0, j = 0;
  double Fa = 0, Fb = 0, total = 0;
  double cur = std::min(xa.front(), xb.front());
  while (i < xa.size() || j < xb.size()) {
    const double na = i < xa.size() ? xa[i] : INFINITY;
    const double nb = j < xb.size() ? xb[j] : INFINITY;
    const double next = std::min(na, nb);
    total += std::abs(Fa - Fb) * (next - cur);
    cur = next;
    while (i < xa.size() && xa[i] == next) Fa += wa[i++];
    while (j < xb.size() && xb[j] == next) Fb += wb[j++];
  }
  return total;
}

DistanceEstimate w1_exact_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, BootstrapOptions boot) {
  check_1d_pair(a, b, "w1_exact_1d");
  auto sa = sorted_column(a), sb = sorted_column(b);
  DistanceEstimate e;
  e.value = w1_sorted(sa, sb);
  e.n_a = e.n_b = sa.size();
  if (boot.resamples > 0) {
    const std::size_t n = sa.size();
    std::vector<double> reps(static_cast<std::size_t>(boot.resamples));
    parallel_for(reps.size(), [&](std::size_t r) {
      RngStream rng(boot.seed, kBootTag + r);
      auto ca = multinomial_counts(n, rng), cb = multinomial_counts(n, rng);
      std::vector<double> wa(n), wb(n);
      // sample labels are arbitrary, so counts can index the sorted order
      for (std::size_t i = 0; i < n; ++i) {
        wa[i] = ca[i] / static_cast<double>(n);
        wb[i] = cb[i] / static_cast<double>(n);
      }
      reps[r] = w1_weighted(sa, wa, sb, wb);
    });
    e.std_error = stddev(reps);
    e.resamples = boot.resamples;
  }
  return e;
}

DistanceEstimate w2_exact_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_1d_pair(a, b, "w2_exact_1d");
  auto sa = sorted_column(a), sb = sorted_column(b);
  DistanceEstimate e;
  e.value = w2_sorted(sa, sb);
  e.n_a = e.n_b = sa.size();
  return e;
}

Vector slice_direction(std::uint64_t seed, int p, int d) {
  RngStream rng(seed, static_cast<std::uint64_t>(p));
  Vector v(d);
  do {
    rng.fill_gaussian(v);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

DistanceEstimate w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const SlicedOptions& opt) {
  check_measure(a, "w1_sliced");
  check_measure(b, "w1_sliced");
  if (a.cols() != b.cols()) throw UsageError("w1_sliced: dimension mismatch");
  require(opt.projections >= 1, "w1_sliced: projections must be >= 1");
  require(opt.resamples >= 0, "w1_sliced: resamples must be >= 0");
  const int d = static_cast<int>(a.cols());
  const std::size_t P = static_cast<std::size_t>(opt.projections);
  const std::size_t na = a.rows(), nb = b.rows();

  std::vector<SortedProjection> pa(P), pb(P);
  std::vector<double> per(P);
  const std::vector<double> ua(na, 1.0 / na), ub(nb, 1.0 / nb);
  parallel_for(P, [&](std::size_t p) {
    Vector dir = slice_direction(opt.seed, static_cast<int>(p), d);
    pa[p] = project_sorted(a, dir);
    pb[p] = project_sorted(b, dir);
    per[p] = na == nb ? w1_sorted(pa[p].x, pb[p].x) : w1_weighted(pa[p].x, ua, pb[p].x, ub);
  });

  DistanceEstimate e;
  e.method = DistanceMethod::sliced;
  e.projections = opt.projections;
  e.value = pairwise_sum(per) / static_cast<double>(P);
  e.n_a = na;
  e.n_b = nb;
  if (opt.resamples > 0) {
    std::vector<double> reps(static_cast<std::size_t>(opt.resamples));
    parallel_for(reps.size(), [&](std::size_t r) {
      RngStream rng(opt.seed, kBootTag + r);
      auto ca = multinomial_counts(na, rng), cb = multinomial_counts(nb, rng);
      std::vector<double> vals(P);
      for (std::size_t p = 0; p < P; ++p)
        vals[p] = w1_weighted(pa[p].x, permuted_weights(pa[p], ca), pb[p].x, permuted_weights(pb[p], cb));
      reps[r] = pairwise_sum(vals) / static_cast<double>(P);
    });
    e.std_error = stddev(reps);
    e.resamples = opt.resamples;
  }
  return e;
}

double SlicedReference::Slice::G(double t) const {
  const std::size_t k = static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), t) - r.begin());
  return (static_cast<double>(k) * t - prefix[k]) / static_cast<double>(r.size());
}

// Smallest t with F(t) ≥ cum/total.
double SlicedReference::Slice::crossing(std::uint64_t cum, std::uint64_t total) const {
  if (cum == 0) return -INFINITY;
  const std::uint64_t N = r.size();
  const std::uint64_t k = (cum * N + total - 1) / total;
  return r[static_cast<std::size_t>(k - 1)];
}

SlicedReference::SlicedReference(const EmpiricalMeasure& ref, int projections, std::uint64_t seed)
    : dim_(static_cast<int>(ref.cols())), n_(static_cast<std::size_t>(ref.rows())), seed_(seed) {
  check_measure(ref, "SlicedReference");
  require(projections >= 1, "SlicedReference: projections must be >= 1");
  require(n_ < (1ull << 31), "SlicedReference: reference too large");
  dirs_.resize(projections, dim_);
  for (int p = 0; p < projections; ++p) dirs_.row(p) = slice_direction(seed, p, dim_).transpose();
  slices_.resize(static_cast<std::size_t>(projections));
  parallel_for(slices_.size(), [&](std::size_t p) {
    auto& s = slices_[p];
    s.r.resize(n_);
    Vector dir = dirs_.row(static_cast<Eigen::Index>(p)).transpose();
    Vector proj = ref * dir;
    std::copy(proj.data(), proj.data() + n_, s.r.begin());
    std::sort(s.r.begin(), s.r.end());
    s.prefix.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) s.prefix[i + 1] = s.prefix[i] + s.r[i];
  });
}

double SlicedReference::slice_w1(const Slice& s, std::span<const double> x, std::span<const std::uint32_t> counts,
                                 std::uint64_t total) const {
  // On [lo, hi] the sample CDF is the constant C = cum/total; F crosses C at t*.
  auto piece = [&](double lo, double hi, double Glo, double Ghi, std::uint64_t cum) {
    const double C = static_cast<double>(cum) / static_cast<double>(total);
    const double t = std::clamp(s.crossing(cum, total), lo, hi);
    const double Gt = s.G(t);
    return C * (t - lo) - (Gt - Glo) + (Ghi - Gt) - C * (hi - t);
  };
  const double lo = std::min(x.front(), s.r.front());
  const double hi = std::max(x.back(), s.r.back());
  double prevG = s.G(x[0]);
  double acc = piece(lo, x[0], s.G(lo), prevG, 0);
  std::uint64_t cum = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    cum += counts[j];
    const double right = j + 1 < x.size() ? x[j + 1] : hi;
    const double Gr = s.G(right);
    acc += piece(x[j], right, prevG, Gr, cum);
    prevG = Gr;
  }
  return acc;
}

DistanceEstimate SlicedReference::distance(const EmpiricalMeasure& samples, int resamples,
                                           std::uint64_t boot_seed) const {
  check_measure(samples, "SlicedReference::distance");
  if (samples.cols() != dim_) throw UsageError("SlicedReference::distance: dimension mismatch");
  const std::size_t P = slices_.size(), n = samples.rows();
  std::vector<SortedProjection> proj(P);
  std::vector<double> per(P);
  const std::vector<std::uint32_t> ones(n, 1u);
  parallel_for(P, [&](std::size_t p) {
    proj[p] = project_sorted(samples, dirs_.row(static_cast<Eigen::Index>(p)).transpose());
    per[p] = slice_w1(slices_[p], proj[p].x, ones, n);
  });
  DistanceEstimate e;
  e.method = DistanceMethod::sliced;
  e.projections = static_cast<int>(P);
  e.value = pairwise_sum(per) / static_cast<double>(P);
  e.n_a = n;
  e.n_b = n_;
  if (resamples > 0) {
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    parallel_for(reps.size(), [&](std::size_t r) {
      RngStream rng(boot_seed, kBootTag + r);
      auto c = multinomial_counts(n, rng);
      std::vector<double> vals(P);
      std::vector<std::uint32_t> sorted_c(n);
      for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t k = 0; k < n; ++k) sorted_c[k] = c[proj[p].perm[k]];
        vals[p] = slice_w1(slices_[p], proj[p].x, sorted_c, n);
      }
      reps[r] = pairwise_sum(vals) / static_cast<double>(P);
    });
    e.std_error = stddev(reps);
    e.resamples = resamples;
  }
  return e;
}

std::pair<double, double> wf_sandwich(double w1, const DistanceFn& fn) {
  const auto& p = fn.params();
  return {0.5 * std::exp(-p.alpha_f * p.r_f * p.r_f) * w1, w1};
}

namespace {

// Minimum over all bijections of mean f(|a_i - b_σ(i)|), by subset DP.
double wf_assignment(std::span<const double> a, std::span<const double> b, const DistanceFn& fn) {
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = fn.f(std::abs(a[i] - b[j]));
  std::vector<double> dp(std::size_t{1} << n, INFINITY);
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask + 1 < dp.size(); ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const std::size_t i = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      auto& t = dp[mask | (std::size_t{1} << j)];
      t = std::min(t, dp[mask] + cost[i * n + j]);
    }
  }
  return dp.back() / static_cast<double>(n);
}

double wf_monotone(std::span<const double> a, std::span<const double> b, const DistanceFn& fn) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = fn.f(std::abs(a[i] - b[i]));
  return pairwise_sum(v) / static_cast<double>(a.size());
}

constexpr std::size_t kExhaustiveMax = 10;

}  // namespace

DistanceEstimate wf_empirical(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const DistanceFn& fn,
                              BootstrapOptions boot) {
  check_measure(a, "wf_empirical");
  check_measure(b, "wf_empirical");
  if (a.cols() != 1 || b.cols() != 1)
    throw UsageError("wf_empirical: only 1-D measures; for d > 1 bound W_f through wf_sandwich(W1)");
  check_1d_pair(a, b, "wf_empirical");
  auto sa = sorted_column(a), sb = sorted_column(b);
  const std::size_t n = sa.size();
  const bool exact = n <= kExhaustiveMax;
  auto estimate = [&](std::span<const double> x, std::span<const double> y) {
    return exact ? wf_assignment(x, y, fn) : wf_monotone(x, y, fn);
  };

  DistanceEstimate e;
  e.method = exact ? DistanceMethod::exact_1d : DistanceMethod::monotone_upper_bound;
  e.value = estimate(sa, sb);
  e.n_a = e.n_b = n;
  auto [lo, hi] = wf_sandwich(w1_sorted(sa, sb), fn);
  e.lower = lo;
  e.upper = hi;
  const double slack = 1e-12 * hi + 1e-15;
  if (e.value < lo - slack || e.value > hi + slack)
    throw NumericalError("wf_empirical: sandwich violated (value " + std::to_string(e.value) + ", bounds [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "])");

  if (boot.resamples > 0) {
    std::vector<double> reps(static_cast<std::size_t>(boot.resamples));
    parallel_for(reps.size(), [&](std::size_t r) {
      RngStream rng(boot.seed, kBootTag + r);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      std::vector<double> x(n), y(n);
      for (auto& v : x) v = sa[pick(rng.engine())];
      for (auto& v : y) v = sb[pick(rng.engine())];
      std::sort(x.begin(), x.end());
      std::sort(y.begin(), y.end());
      reps[r] = estimate(x, y);
    });
    e.std_error = stddev(reps);
    e.resamples = boot.resamples;
  }
  return e;
}

MomentCheck second_moment_check(const EmpiricalMeasure& samples, const Potential& U) {
  check_measure(samples, "second_moment_check");
  if (samples.cols() != U.dim()) throw UsageError("second_moment_check: dimension mismatch");
  std::vector<double> sq(samples.rows());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) sq[i] = samples.row(i).squaredNorm();
  auto ms = mean_se(sq);
  MomentCheck c;
  c.n = sq.size();
  c.mean_sq = ms.mean;
  c.std_error = ms.std_error;
  const double d = samples.cols();
  c.bound = 2.0 * d / U.m() + 18.0 * U.R() * U.R();
  c.margin = c.bound + 3.0 * c.std_error - c.mean_sq;
  c.passed = c.margin >= 0.0;
  return c;
}

}  // namespace lmc
