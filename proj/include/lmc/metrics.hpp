#pragma once

#include "lmc/common.hpp"
#include "lmc/distance_fn.hpp"
#include "lmc/potentials.hpp"

#include <optional>
#include <string>

namespace lmc {

/// Uniformly weighted samples, one row per sample.
using EmpiricalMeasure = Matrix;

enum class DistanceMethod { exact_1d, sliced, monotone_upper_bound };
std::string to_string(DistanceMethod m);

struct DistanceEstimate {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::exact_1d;
  int projections = 0;
  double std_error = 0.0;  // bootstrap; 0 when no resamples were drawn
  int resamples = 0;
  std::size_t n_a = 0, n_b = 0;
  // W_f only: ½e^{-α R_f²} W₁ and W₁ computed on the same samples.
  std::optional<double> lower, upper;

  json to_json() const;
};

struct BootstrapOptions {
  int resamples = 200;
  std::uint64_t seed = 0;
};

/// Throws UsageError for an empty measure, DomainError for non-finite entries.
void check_measure(const EmpiricalMeasure& a, const char* name);

/// Exact empirical W₁ between two 1-D measures of equal size.
DistanceEstimate w1_exact_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, BootstrapOptions boot = {0, 0});
double w1_sorted(std::span<const double> a, std::span<const double> b);  // inputs sorted, equal size
double w2_sorted(std::span<const double> a, std::span<const double> b);
DistanceEstimate w2_exact_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// W₁ between weighted 1-D measures: ∫|F_a - F_b|. Inputs sorted, weights sum to one.
double w1_weighted(std::span<const double> xa, std::span<const double> wa, std::span<const double> xb,
                   std::span<const double> wb);

struct SlicedOptions {
  int projections = 128;
  std::uint64_t seed = 0;
  int resamples = 200;
};

/// Unit direction for projection p. Depends only on (seed, p, d).
Vector slice_direction(std::uint64_t seed, int p, int d);

/// Average 1-D W₁ over random projections. Both sides are bootstrapped.
DistanceEstimate w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const SlicedOptions& opt = {});

/// Pre-sorted projections of a large fixed reference. Distances to it cost
/// O(n log N) per projection; the bootstrap resamples the sample side only.
class SlicedReference {
 public:
  SlicedReference(const EmpiricalMeasure& ref, int projections = 128, std::uint64_t seed = 0);

  DistanceEstimate distance(const EmpiricalMeasure& samples, int resamples = 0, std::uint64_t boot_seed = 0) const;
  int dim() const { return dim_; }
  std::size_t size() const { return n_; }
  int projections() const { return static_cast<int>(dirs_.rows()); }

 private:
  struct Slice {
    std::vector<double> r;       // sorted projections
    std::vector<double> prefix;  // prefix[k] = Σ_{i<k} r_i
    double G(double t) const;    // ∫_{-∞}^t F(s) ds
    double crossing(std::uint64_t cum, std::uint64_t total) const;
  };
  // sorted sample values with multiplicities c_j out of `total`
  double slice_w1(const Slice& s, std::span<const double> x, std::span<const std::uint32_t> counts,
                  std::uint64_t total) const;

  int dim_;
  std::size_t n_;
  std::uint64_t seed_;
  Matrix dirs_;
  std::vector<Slice> slices_;
};

/// Empirical W_f in 1-D. Exact minimum over all assignments for n ≤ 10,
/// otherwise the monotone coupling (an upper bound for concave f).
/// Every call checks the sandwich ½e^{-α R_f²}W₁ ≤ W_f ≤ W₁.
DistanceEstimate wf_empirical(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const DistanceFn& fn,
                              BootstrapOptions boot = {0, 0});

/// Bounds on W_f implied by a W₁ value, for d > 1.
std::pair<double, double> wf_sandwich(double w1, const DistanceFn& fn);

struct MomentCheck {
  double mean_sq = 0.0;
  double std_error = 0.0;
  double bound = 0.0;   // 2d/m + 18R²
  double margin = 0.0;  // bound + 3 SE - mean_sq
  bool passed = false;
  std::size_t n = 0;
  json to_json() const;
};

MomentCheck second_moment_check(const EmpiricalMeasure& samples, const Potential& U);

}  // namespace lmc
