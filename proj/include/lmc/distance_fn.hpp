#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

namespace lmc {

struct DistanceFnParams {
  double alpha_f = 1.0;
  double r_f = 1.0;
  bool operator==(const DistanceFnParams&) const = default;
};

/// Concave distance warping f(r) = ∫₀ʳ ψ(s) g(s) ds with
///   ψ(r) = exp(-α_f min(r², R_f²)),  Ψ(r) = ∫₀ʳ ψ,
///   g(r) = 1 - ½ ∫₀^{min(r,R_f)} Ψ/ψ / ∫₀^{R_f} Ψ/ψ.
/// Ψ, J = ∫Ψ/ψ and f are tabulated on [0, R_f] by nested adaptive Simpson and
/// evaluated by cubic Hermite interpolation (node derivatives are known in closed
/// form). Beyond R_f everything is linear or constant and evaluated exactly.
/// Immutable after construction.
class DistanceFn {
 public:
  explicit DistanceFn(DistanceFnParams p, double tol = 1e-10, int nodes = 4096);

  const DistanceFnParams& params() const { return p_; }
  double psi_cap() const { return psi_cap_; }
  double tolerance() const { return tol_; }

  double psi(double r) const;
  double capital_psi(double r) const;
  double g(double r) const;
  double f(double r) const;
  double fprime(double r) const;
  std::pair<double, double> f_and_fprime(double r) const { return {f(r), fprime(r)}; }

  /// f'' by a central difference of f' with step h (f' is even in r). Near R_f
  /// a one-sided second-order stencil is used, left of R_f for r ≤ R_f.
  double fprime2_fd(double r, double h = 1e-5) const;
  /// ψ'g + ψg', used as a cross-check of fprime2_fd.
  double fprime2_closed(double r) const;

  /// Inner integral ∫₀^{min(r,R_f)} Ψ/ψ.
  double inner(double r) const;

  const std::vector<double>& nodes() const { return r_; }
  const std::vector<double>& f_table() const { return f_; }

  /// CSV with columns r, psi, Psi, g, f, fprime over the table plus a geometric
  /// tail up to 10 R_f.
  void dump_csv(std::ostream& os) const;

 private:
  static void check_r(double r);
  std::size_t segment(double r) const;
  double hermite(const std::vector<double>& y, const std::vector<double>& dy, double r) const;

  DistanceFnParams p_;
  double tol_;
  double psi_cap_;
  double h_;  // node spacing on [0, R_f]
  std::vector<double> r_, Psi_, J_, f_;
  std::vector<double> dPsi_, dJ_, df_;
  double J_R_;
};

}  // namespace lmc
