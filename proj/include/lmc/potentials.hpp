#pragma once

#include "lmc/common.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lmc {

using json = nlohmann::json;

/// Declared constants of a potential: gradient Lipschitz constant L, strong
/// convexity m outside a ball of radius R.
struct Constants {
  double L = 1.0;
  double m = 1.0;
  double R = 0.0;
  double kappa() const { return L / m; }
};

/// Smooth potential U on R^d. Implementations are pure and reentrant.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual int dim() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& x) const = 0;
  virtual void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const = 0;
  virtual std::string kind() const = 0;
  /// Spec block that reconstructs this potential via make_potential.
  virtual json spec() const = 0;

  /// Draws one exact sample from p* ∝ exp(-U) when the kind supports it.
  virtual bool has_exact_sampler() const { return false; }
  virtual void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const;

  /// Upper bound on sup_x [-U(x) + |x|^2 / (2 s2)] for a N(0, s2 I) proposal,
  /// if known in closed form.
  virtual std::optional<double> rejection_log_bound(double s2) const;

  const Constants& constants() const { return c_; }
  double L() const { return c_.L; }
  double m() const { return c_.m; }
  double R() const { return c_.R; }
  double kappa() const { return c_.kappa(); }

 protected:
  Constants c_;
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// U(x) = ½ Σ m_i x_i². L = max m_i, m = min m_i. R is declared (default 1).
class Quadratic final : public Potential {
 public:
  Quadratic(int dim, double m, double R = 1.0);
  explicit Quadratic(Vector curvatures, double R = 1.0);

  int dim() const override { return static_cast<int>(k_.size()); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override;
  std::string kind() const override { return "quadratic"; }
  json spec() const override;
  bool has_exact_sampler() const override { return true; }
  void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const override;
  std::optional<double> rejection_log_bound(double s2) const override;

  const Vector& curvatures() const { return k_; }

 private:
  Vector k_;
};

/// U(x) = -log Σ w_k exp(-|x - c_k|² / (2σ²)), common variance σ².
///   L = 1/σ² + D²/(4σ⁴), m = 1/(2σ²), R = 2D, D = max pairwise center distance.
class GaussianMixture final : public Potential {
 public:
  /// centers: one column per component.
  GaussianMixture(Eigen::MatrixXd centers, double sigma2, std::vector<double> weights = {});

  int dim() const override { return static_cast<int>(centers_.rows()); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override;
  std::string kind() const override { return "gaussian_mixture"; }
  json spec() const override;
  bool has_exact_sampler() const override { return true; }
  void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const override;
  std::optional<double> rejection_log_bound(double s2) const override;

  const Eigen::MatrixXd& centers() const { return centers_; }
  double sigma2() const { return sigma2_; }

 private:
  Eigen::MatrixXd centers_;
  double sigma2_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> cumulative_;
};

/// Separable double well U(x) = h(x₁) + (L₀/2)|x_⊥|², with h'' = -b on |s| ≤ a
/// and h'' = L₀ outside. h' is continuous and piecewise linear, so
///   L = max(L₀, b), m = L₀/2, R = 4a(L₀ + b)/L₀
/// hold exactly. Minima at x₁ = ±a(1 + b/L₀).
class DoubleWell final : public Potential {
 public:
  DoubleWell(int dim, double a = 0.5, double b = 1.0, double L0 = 1.0);

  int dim() const override { return dim_; }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override;
  std::string kind() const override { return "double_well"; }
  json spec() const override;
  bool has_exact_sampler() const override { return true; }
  void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const override;

  double h(double s) const;
  double hprime(double s) const;
  double well_position() const { return a_ * (1.0 + b_ / L0_); }

 private:
  int dim_;
  double a_, b_, L0_;
  double log_env_;  // sup_s [-h(s) + L0 s² / 4] for the x₁ rejection step
};

/// U(x + shift). Same constants as the base potential.
class Shifted final : public Potential {
 public:
  Shifted(PotentialPtr base, Vector shift);

  int dim() const override { return base_->dim(); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override;
  std::string kind() const override { return base_->kind(); }
  json spec() const override;
  bool has_exact_sampler() const override { return base_->has_exact_sampler(); }
  void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const override;

 private:
  PotentialPtr base_;
  Vector shift_;
};

/// Same evaluator, user-declared constants (used to test audits against wrong claims).
class Declared final : public Potential {
 public:
  Declared(PotentialPtr base, Constants declared);

  int dim() const override { return base_->dim(); }
  double value(const Eigen::Ref<const Vector>& x) const override { return base_->value(x); }
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override {
    base_->gradient(x, g);
  }
  std::string kind() const override { return base_->kind(); }
  json spec() const override;
  bool has_exact_sampler() const override { return base_->has_exact_sampler(); }
  void sample_target(RngStream& rng, Eigen::Ref<Vector> out) const override {
    base_->sample_target(rng, out);
  }
  std::optional<double> rejection_log_bound(double s2) const override {
    return base_->rejection_log_bound(s2);
  }

 private:
  PotentialPtr base_;
};

/// Builds a potential from a spec block {kind, dim, params...}. Optional keys
/// "shift" (vector) and "declared" ({L, m, R}) wrap the result.
PotentialPtr make_potential(const json& spec);

struct Evaluation {
  double value;
  Vector gradient;
};

/// Checked evaluation: dimension mismatch → UsageError, non-finite input → DomainError.
Evaluation eval(const Potential& U, const Vector& x);

/// Gradient with a finiteness check naming the offending coordinate.
void checked_gradient(const Potential& U, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g);

/// Max over coordinates of |central difference − analytic gradient|.
double check_gradient_fd(const Potential& U, const Vector& x, double h);

struct AuditViolation {
  std::string assumption;  // "A1", "A2" or "A3"
  Vector x, y;
  double observed;
  double declared;
};

struct AuditOptions {
  std::size_t pair_budget = 10000;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  double origin_tol = 1e-9;
  std::optional<Vector> center;  // sampling centre, default origin
};

struct AuditReport {
  Constants declared;
  std::size_t pairs = 0;
  std::size_t far_pairs = 0;      // pairs with |x-y| > R
  double max_lipschitz_ratio = 0;  // max |∇U(x)-∇U(y)| / |x-y|
  double min_convexity_ratio = 0;  // min <∇U(x)-∇U(y), x-y> / |x-y|² over far pairs
  double min_inner_ratio = 0;      // same ratio over pairs with |x-y| ≤ R
  double grad_origin_norm = 0;
  bool a1_ok = true, a2_ok = true, a3_ok = true;
  std::vector<AuditViolation> violations;

  bool passed() const { return a1_ok && a2_ok && a3_ok; }
  json to_json() const;
};

AuditReport audit_constants(const Potential& U, const AuditOptions& opt);

/// Rejection sampling from p* with a N(0, s2 I) proposal. `log_bound` must dominate
/// -U(x) + |x|²/(2 s2); a violated bound throws NumericalError.
Matrix rejection_sample(const Potential& U, double s2, double log_bound, std::size_t n,
                        std::uint64_t seed);

/// n exact draws from p* (one RNG stream per row).
Matrix sample_target(const Potential& U, std::size_t n, std::uint64_t seed);

}  // namespace lmc
