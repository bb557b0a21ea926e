#include "lmc/potentials.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lmc {

void Potential::sample_target(RngStream&, Eigen::Ref<Vector>) const {
  throw UsageError("potential kind '" + kind() + "' has no exact sampler");
}

std::optional<double> Potential::rejection_log_bound(double) const { return std::nullopt; }

// ---------------------------------------------------------------- quadratic

Quadratic::Quadratic(int dim, double m, double R)
    : Quadratic(Vector::Constant(dim, m), R) {}

Quadratic::Quadratic(Vector curvatures, double R) : k_(std::move(curvatures)) {
  require(k_.size() >= 1, "quadratic: dim must be positive");
  require((k_.array() > 0).all(), "quadratic: curvatures must be positive");
  require(R >= 0, "quadratic: R must be nonnegative");
  c_ = {k_.maxCoeff(), k_.minCoeff(), R};
}

double Quadratic::value(const Eigen::Ref<const Vector>& x) const {
  return 0.5 * (k_.array() * x.array().square()).sum();
}

void Quadratic::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const {
  g = k_.cwiseProduct(x);
}

json Quadratic::spec() const {
  json j{{"kind", "quadratic"}, {"dim", dim()}, {"R", c_.R}};
  if ((k_.array() == k_(0)).all()) {
    j["m"] = k_(0);
  } else {
    j["curvatures"] = std::vector<double>(k_.data(), k_.data() + k_.size());
  }
  return j;
}

void Quadratic::sample_target(RngStream& rng, Eigen::Ref<Vector> out) const {
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.gaussian() / std::sqrt(k_(i));
}

std::optional<double> Quadratic::rejection_log_bound(double s2) const {
  if (s2 * c_.m < 1.0) return std::nullopt;
  return 0.0;
}

// ---------------------------------------------------------------- mixture

GaussianMixture::GaussianMixture(Eigen::MatrixXd centers, double sigma2, std::vector<double> weights)
    : centers_(std::move(centers)), sigma2_(sigma2), weights_(std::move(weights)) {
  const auto K = centers_.cols();
  require(centers_.rows() >= 1 && K >= 1, "gaussian_mixture: need at least one center");
  require(sigma2_ > 0, "gaussian_mixture: sigma2 must be positive");
  if (weights_.empty()) weights_.assign(K, 1.0);
  require(static_cast<Eigen::Index>(weights_.size()) == K,
          "gaussian_mixture: weights and centers differ in length");
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  require(total > 0, "gaussian_mixture: weights must sum to a positive value");
  double acc = 0.0;
  for (auto& w : weights_) {
    require(w >= 0, "gaussian_mixture: negative weight");
    w /= total;
    log_weights_.push_back(std::log(w));
    acc += w;
    cumulative_.push_back(acc);
  }
  double D = 0.0;
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = i + 1; j < K; ++j)
      D = std::max(D, (centers_.col(i) - centers_.col(j)).norm());
  c_.L = 1.0 / sigma2_ + D * D / (4.0 * sigma2_ * sigma2_);
  c_.m = 1.0 / (2.0 * sigma2_);
  c_.R = 2.0 * D;
}

double GaussianMixture::value(const Eigen::Ref<const Vector>& x) const {
  double M = -std::numeric_limits<double>::infinity(), S = 0.0;
  for (Eigen::Index k = 0; k < centers_.cols(); ++k) {
    const double l = log_weights_[k] - (x - centers_.col(k)).squaredNorm() / (2.0 * sigma2_);
    if (l > M) {
      S *= std::exp(M - l);
      M = l;
    }
    S += std::exp(l - M);
  }
  return -(M + std::log(S));
}

void GaussianMixture::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const {
  // Online softmax; g accumulates the posterior mean of the centers.
  double M = -std::numeric_limits<double>::infinity(), S = 0.0;
  g.setZero();
  for (Eigen::Index k = 0; k < centers_.cols(); ++k) {
    const double l = log_weights_[k] - (x - centers_.col(k)).squaredNorm() / (2.0 * sigma2_);
    if (l > M) {
      const double s = std::exp(M - l);
      S *= s;
      g *= s;
      M = l;
    }
    const double e = std::exp(l - M);
    S += e;
    g += e * centers_.col(k);
  }
  g = (x - g / S) / sigma2_;
}

json GaussianMixture::spec() const {
  json centers = json::array();
  for (Eigen::Index k = 0; k < centers_.cols(); ++k)
    centers.push_back(std::vector<double>(centers_.col(k).data(), centers_.col(k).data() + dim()));
  return json{{"kind", "gaussian_mixture"}, {"dim", dim()},     {"centers", centers},
              {"sigma2", sigma2_},          {"weights", weights_}};
}

void GaussianMixture::sample_target(RngStream& rng, Eigen::Ref<Vector> out) const {
  const double u = rng.uniform();
  std::size_t k = 0;
  while (k + 1 < cumulative_.size() && u >= cumulative_[k]) ++k;
  const double s = std::sqrt(sigma2_);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = centers_(i, k) + s * rng.gaussian();
}

std::optional<double> GaussianMixture::rejection_log_bound(double s2) const {
  if (s2 <= sigma2_) return std::nullopt;
  // Each component: sup_x -|x-c|²/(2σ²) + |x|²/(2 s2) = |c|² / (2 (s2 - σ²)).
  double M = -std::numeric_limits<double>::infinity();
  std::vector<double> l(centers_.cols());
  for (Eigen::Index k = 0; k < centers_.cols(); ++k) {
    l[k] = log_weights_[k] + centers_.col(k).squaredNorm() / (2.0 * (s2 - sigma2_));
    M = std::max(M, l[k]);
  }
  double S = 0.0;
  for (double v : l) S += std::exp(v - M);
  return M + std::log(S);
}

// ---------------------------------------------------------------- double well

DoubleWell::DoubleWell(int dim, double a, double b, double L0) : dim_(dim), a_(a), b_(b), L0_(L0) {
  require(dim >= 1, "double_well: dim must be positive");
  require(a > 0 && b > 0 && L0 > 0, "double_well: a, b, L must be positive");
  c_.L = std::max(L0, b);
  c_.m = L0 / 2.0;
  c_.R = 4.0 * a * (L0 + b) / L0;
  // -h(s) + L0 s²/4 is increasing on [0, a] and concave on [a, ∞).
  auto env = [&](double s) { return -h(s) + L0_ * s * s / 4.0; };
  const double s_star = std::max(a, 2.0 * a * (b + L0) / L0);
  log_env_ = std::max({env(0.0), env(a), env(s_star)});
}

double DoubleWell::h(double s) const {
  const double t = std::abs(s);
  if (t <= a_) return -0.5 * b_ * t * t;
  const double e = t - a_;
  return -0.5 * b_ * a_ * a_ - b_ * a_ * e + 0.5 * L0_ * e * e;
}

double DoubleWell::hprime(double s) const {
  const double t = std::abs(s);
  const double v = t <= a_ ? -b_ * t : -b_ * a_ + L0_ * (t - a_);
  return s < 0 ? -v : v;
}

double DoubleWell::value(const Eigen::Ref<const Vector>& x) const {
  return h(x(0)) + 0.5 * L0_ * x.tail(dim_ - 1).squaredNorm();
}

void DoubleWell::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const {
  g = L0_ * x;
  g(0) = hprime(x(0));
}

json DoubleWell::spec() const {
  return json{{"kind", "double_well"}, {"dim", dim_}, {"a", a_}, {"b", b_}, {"L", L0_}};
}

void DoubleWell::sample_target(RngStream& rng, Eigen::Ref<Vector> out) const {
  // x₁ by rejection from N(0, 2/L0); the rest is Gaussian.
  const double sd = std::sqrt(2.0 / L0_);
  for (;;) {
    const double s = sd * rng.gaussian();
    const double logr = -h(s) + L0_ * s * s / 4.0 - log_env_;
    if (std::log(rng.uniform()) < logr) {
      out(0) = s;
      break;
    }
  }
  for (int i = 1; i < dim_; ++i) out(i) = rng.gaussian() / std::sqrt(L0_);
}

// ---------------------------------------------------------------- wrappers

Shifted::Shifted(PotentialPtr base, Vector shift) : base_(std::move(base)), shift_(std::move(shift)) {
  require(shift_.size() == base_->dim(), "shift: dimension mismatch");
  c_ = base_->constants();
}

double Shifted::value(const Eigen::Ref<const Vector>& x) const { return base_->value(x + shift_); }

void Shifted::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const {
  base_->gradient(x + shift_, g);
}

json Shifted::spec() const {
  json j = base_->spec();
  j["shift"] = std::vector<double>(shift_.data(), shift_.data() + shift_.size());
  return j;
}

void Shifted::sample_target(RngStream& rng, Eigen::Ref<Vector> out) const {
  base_->sample_target(rng, out);
  out -= shift_;
}

Declared::Declared(PotentialPtr base, Constants declared) : base_(std::move(base)) {
  require(declared.L > 0 && declared.m > 0 && declared.R >= 0, "declared: invalid constants");
  c_ = declared;
}

json Declared::spec() const {
  json j = base_->spec();
  j["declared"] = {{"L", c_.L}, {"m", c_.m}, {"R", c_.R}};
  return j;
}

// ---------------------------------------------------------------- factory

namespace {

Vector to_vector(const json& j, const std::string& what) {
  require(j.is_array(), what + " must be an array of numbers");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), what + " must be an array of numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j[key].is_number(), std::string("potential.") + key + " must be a number");
  return j[key].get<double>();
}

}  // namespace

PotentialPtr make_potential(const json& spec) {
  require(spec.is_object(), "potential spec must be a table");
  require(spec.contains("kind") && spec["kind"].is_string(), "potential.kind is required");
  const std::string kind = spec["kind"].get<std::string>();
  const int dim = spec.contains("dim") ? spec["dim"].get<int>() : 0;
  PotentialPtr p;
  if (kind == "quadratic") {
    const double R = number(spec, "R", 1.0);
    if (spec.contains("curvatures")) {
      p = std::make_shared<Quadratic>(to_vector(spec["curvatures"], "potential.curvatures"), R);
    } else {
      require(dim >= 1, "potential.dim is required and must be positive");
      p = std::make_shared<Quadratic>(dim, number(spec, "m", 1.0), R);
    }
  } else if (kind == "gaussian_mixture" || kind == "gaussian-mixture-equal-covariance") {
    require(spec.contains("centers") && spec["centers"].is_array() && !spec["centers"].empty(),
            "potential.centers is required");
    const auto& cs = spec["centers"];
    const auto d = static_cast<Eigen::Index>(cs[0].size());
    Eigen::MatrixXd C(d, cs.size());
    for (std::size_t k = 0; k < cs.size(); ++k) {
      Vector c = to_vector(cs[k], "potential.centers[" + std::to_string(k) + "]");
      require(c.size() == d, "potential.centers: ragged center list");
      C.col(k) = c;
    }
    require(dim == 0 || dim == d, "potential.dim disagrees with center length");
    std::vector<double> w;
    if (spec.contains("weights")) w = spec["weights"].get<std::vector<double>>();
    p = std::make_shared<GaussianMixture>(C, number(spec, "sigma2", 1.0), w);
  } else if (kind == "double_well" || kind == "smoothed-double-well") {
    require(dim >= 1, "potential.dim is required and must be positive");
    p = std::make_shared<DoubleWell>(dim, number(spec, "a", 0.5), number(spec, "b", 1.0),
                                     number(spec, "L", 1.0));
  } else {
    throw UsageError("potential.kind: unknown kind '" + kind + "'");
  }
  if (spec.contains("shift")) p = std::make_shared<Shifted>(p, to_vector(spec["shift"], "potential.shift"));
  if (spec.contains("declared")) {
    const auto& d = spec["declared"];
    Constants c = p->constants();
    c.L = number(d, "L", c.L);
    c.m = number(d, "m", c.m);
    c.R = number(d, "R", c.R);
    p = std::make_shared<Declared>(p, c);
  }
  return p;
}

// ---------------------------------------------------------------- evaluation

Evaluation eval(const Potential& U, const Vector& x) {
  if (x.size() != U.dim())
    throw UsageError("eval: state has length " + std::to_string(x.size()) + ", potential dim is " +
                     std::to_string(U.dim()));
  if (!x.allFinite()) throw DomainError("eval: state has non-finite coordinates");
  Evaluation e{U.value(x), Vector(U.dim())};
  checked_gradient(U, x, e.gradient);
  if (!std::isfinite(e.value)) throw NumericalError("eval: potential value is not finite");
  return e;
}

void checked_gradient(const Potential& U, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) {
  U.gradient(x, g);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!std::isfinite(g(i)))
      throw NumericalError("gradient coordinate " + std::to_string(i) + " is not finite");
}

double check_gradient_fd(const Potential& U, const Vector& x, double h) {
  if (!(h > 0)) throw DomainError("check_gradient_fd: h must be positive");
  const Vector g = eval(U, x).gradient;
  double err = 0.0;
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    const double fd = (U.value(xp) - U.value(xm)) / (2.0 * h);
    err = std::max(err, std::abs(fd - g(i)));
    xp(i) = xm(i) = x(i);
  }
  return err;
}

// ---------------------------------------------------------------- audit

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json AuditReport::to_json() const {
  json v = json::array();
  for (const auto& w : violations)
    v.push_back({{"assumption", w.assumption},
                 {"x", vec_json(w.x)},
                 {"y", vec_json(w.y)},
                 {"observed", w.observed},
                 {"declared", w.declared}});
  return json{{"declared", {{"L", declared.L}, {"m", declared.m}, {"R", declared.R}}},
              {"pairs", pairs},
              {"far_pairs", far_pairs},
              {"max_lipschitz_ratio", max_lipschitz_ratio},
              {"min_convexity_ratio", min_convexity_ratio},
              {"min_inner_ratio", min_inner_ratio},
              {"grad_origin_norm", grad_origin_norm},
              {"a1_ok", a1_ok},
              {"a2_ok", a2_ok},
              {"a3_ok", a3_ok},
              {"passed", passed()},
              {"violations", v}};
}

AuditReport audit_constants(const Potential& U, const AuditOptions& opt) {
  if (opt.pair_budget < 1) throw UsageError("audit: pair_budget must be at least 1");
  const int d = U.dim();
  const Constants c = U.constants();
  const Vector center = opt.center.value_or(Vector::Zero(d));
  require(center.size() == d, "audit: center dimension mismatch");

  AuditReport rep;
  rep.declared = c;
  rep.min_convexity_ratio = std::numeric_limits<double>::infinity();
  rep.min_inner_ratio = std::numeric_limits<double>::infinity();

  Vector g0(d);
  checked_gradient(U, Vector::Zero(d), g0);
  rep.grad_origin_norm = g0.norm();
  if (rep.grad_origin_norm > opt.origin_tol) {
    rep.a2_ok = false;
    rep.violations.push_back({"A2", Vector::Zero(d), Vector::Zero(d), rep.grad_origin_norm, opt.origin_tol});
  }

  RngStream rng(opt.seed, 0);
  const double rho = 3.0 * std::max(c.R, 1.0);
  Vector x(d), y(d), e(d), gx(d), gy(d);
  auto in_ball = [&](Vector& out) {
    rng.fill_gaussian(e);
    e /= e.norm();
    out = center + rho * std::pow(rng.uniform(), 1.0 / d) * e;
  };

  std::optional<AuditViolation> worst_a1, worst_a3;
  for (std::size_t i = 0; i < opt.pair_budget; ++i) {
    switch (i % 4) {
      case 0:  // uniform pairs in the ball of radius 3R
        in_ball(x);
        in_ball(y);
        break;
      case 1:  // just beyond the nonconvexity radius
        in_ball(x);
        rng.fill_gaussian(e);
        y = x + (c.R * (1.0 + 0.1 * rng.uniform()) + 1e-9) * e / e.norm();
        break;
      case 2:  // local pairs probe the Hessian
        in_ball(x);
        rng.fill_gaussian(e);
        y = x + 1e-3 * rho * e;
        break;
      default:  // Gaussian tails
        rng.fill_gaussian(e);
        x = center + 3.0 * rho * e;
        rng.fill_gaussian(e);
        y = center + 3.0 * rho * e;
    }
    const double r = (x - y).norm();
    if (!(r > 0)) continue;
    checked_gradient(U, x, gx);
    checked_gradient(U, y, gy);
    ++rep.pairs;
    const double lip = (gx - gy).norm() / r;
    const double conv = (gx - gy).dot(x - y) / (r * r);
    rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, lip);
    if (lip > c.L * (1.0 + opt.tol) && (!worst_a1 || lip > worst_a1->observed))
      worst_a1 = AuditViolation{"A1", x, y, lip, c.L};
    if (r > c.R) {
      ++rep.far_pairs;
      rep.min_convexity_ratio = std::min(rep.min_convexity_ratio, conv);
      if (conv < c.m * (1.0 - opt.tol) && (!worst_a3 || conv < worst_a3->observed))
        worst_a3 = AuditViolation{"A3", x, y, conv, c.m};
    } else {
      rep.min_inner_ratio = std::min(rep.min_inner_ratio, conv);
    }
  }
  if (worst_a1) {
    rep.a1_ok = false;
    rep.violations.push_back(*worst_a1);
  }
  if (worst_a3) {
    rep.a3_ok = false;
    rep.violations.push_back(*worst_a3);
  }
  return rep;
}

// ---------------------------------------------------------------- reference samplers

Matrix rejection_sample(const Potential& U, double s2, double log_bound, std::size_t n,
                        std::uint64_t seed) {
  require(s2 > 0, "rejection_sample: proposal variance must be positive");
  const int d = U.dim();
  Matrix out(n, d);
  const double sd = std::sqrt(s2);
  parallel_for(n, [&](std::size_t i) {
    RngStream rng(seed, i);
    Vector x(d);
    for (;;) {
      rng.fill_gaussian(x);
      x *= sd;
      const double logr = -U.value(x) + x.squaredNorm() / (2.0 * s2) - log_bound;
      if (logr > 1e-12) throw NumericalError("rejection_sample: envelope bound violated");
      if (std::log(rng.uniform()) < logr) break;
    }
    out.row(i) = x.transpose();
  });
  return out;
}

Matrix sample_target(const Potential& U, std::size_t n, std::uint64_t seed) {
  const int d = U.dim();
  Matrix out(n, d);
  parallel_for(n, [&](std::size_t i) {
    RngStream rng(seed, i);
    Vector x(d);
    U.sample_target(rng, x);
    out.row(i) = x.transpose();
  });
  return out;
}

}  // namespace lmc
