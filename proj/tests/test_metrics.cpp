#include <doctest.h>

#include "lmc/metrics.hpp"

#include <algorithm>
#include <numeric>

using namespace lmc;

namespace {

EmpiricalMeasure column(std::vector<double> v) {
  EmpiricalMeasure m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

EmpiricalMeasure gaussian(std::size_t n, int d, RngStream& rng, double shift = 0.0) {
  EmpiricalMeasure m(n, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.gaussian() + (j == 0 ? shift : 0.0);
  return m;
}

// Brute force over all n! couplings.
template <class Cost>
double permutation_min(const std::vector<double>& a, const std::vector<double>& b, Cost cost) {
  std::vector<int> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += cost(std::abs(a[i] - b[p[i]]));
    best = std::min(best, s / a.size());
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

std::vector<double> draws(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = 3.0 * rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("w1_exact_1d examples and errors") {
  CHECK(w1_exact_1d(column({1, 2, 3}), column({3, 1, 2})).value == 0.0);
  CHECK(w1_exact_1d(column({0}), column({1})).value == 1.0);
  CHECK_THROWS_AS(w1_exact_1d(column({0, 1}), column({1})), UsageError);
  CHECK_THROWS_AS(w1_exact_1d(EmpiricalMeasure(0, 1), EmpiricalMeasure(0, 1)), UsageError);
  CHECK_THROWS_AS(w1_exact_1d(column({NAN}), column({1})), DomainError);
  EmpiricalMeasure two(3, 2);
  two.setZero();
  CHECK_THROWS_AS(w1_exact_1d(two, two), UsageError);
}

TEST_CASE("w1_exact_1d equals permutation brute force") {
  RngStream rng(42, 0);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 1 + inst % 7;
    auto a = draws(n, rng), b = draws(n, rng);
    const double brute = permutation_min(a, b, [](double r) { return r; });
    CHECK(w1_exact_1d(column(a), column(b)).value == doctest::Approx(brute).epsilon(1e-14));
  }
}

TEST_CASE("w1 triangle inequality and symmetry") {
  RngStream rng(7, 0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 40;
    auto a = column(draws(n, rng)), b = column(draws(n, rng)), c = column(draws(n, rng));
    const double ab = w1_exact_1d(a, b).value, bc = w1_exact_1d(b, c).value, ac = w1_exact_1d(a, c).value;
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(w1_exact_1d(b, a).value == ab);
  }
}

TEST_CASE("weighted merge agrees with sorted differences") {
  RngStream rng(3, 0);
  auto a = draws(50, rng), b = draws(50, rng);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> w(50, 1.0 / 50);
  CHECK(w1_weighted(a, w, b, w) == doctest::Approx(w1_sorted(a, b)).epsilon(1e-13));
  // unequal sizes: {0, 1} vs {0.5} has W₁ = 0.5
  std::vector<double> x{0, 1}, wx{0.5, 0.5}, y{0.5}, wy{1.0};
  CHECK(w1_weighted(x, wx, y, wy) == doctest::Approx(0.5));
}

TEST_CASE("w2_exact_1d") {
  CHECK(w2_exact_1d(column({0, 0}), column({3, 4})).value == doctest::Approx(std::sqrt(12.5)));
  RngStream rng(1, 0);
  auto a = column(draws(30, rng)), b = column(draws(30, rng));
  CHECK(w2_exact_1d(a, b).value >= w1_exact_1d(a, b).value);
}

TEST_CASE("bootstrap error is reported and deterministic") {
  RngStream rng(9, 0);
  auto a = column(draws(400, rng)), b = column(draws(400, rng));
  auto e1 = w1_exact_1d(a, b, {200, 5}), e2 = w1_exact_1d(a, b, {200, 5});
  CHECK(e1.std_error > 0.0);
  CHECK(e1.std_error == e2.std_error);
  CHECK(e1.resamples == 200);
  CHECK(e1.to_json()["method"] == "exact-1d");
}

TEST_CASE("sliced W1 basics") {
  RngStream rng(11, 0);
  auto a = gaussian(500, 2, rng);
  CHECK(w1_sliced(a, a, {16, 1, 0}).value == 0.0);
  auto b = gaussian(500, 3, rng);
  CHECK_THROWS_AS(w1_sliced(a, b), UsageError);
  CHECK_THROWS_AS(w1_sliced(a, a, {0, 1, 0}), UsageError);

  // One projection in d = 1 is the exact 1-D distance.
  auto x = column(draws(100, rng)), y = column(draws(100, rng));
  CHECK(w1_sliced(x, y, {1, 4, 0}).value == doctest::Approx(w1_exact_1d(x, y).value).epsilon(1e-12));

  // Deterministic per seed.
  auto c = gaussian(300, 2, rng, 0.4);
  auto s1 = w1_sliced(a, c, {32, 3, 50}), s2 = w1_sliced(a, c, {32, 3, 50});
  CHECK(s1.value == s2.value);
  CHECK(s1.std_error == s2.std_error);
  CHECK(s1.std_error > 0.0);
  CHECK(s1.to_json()["projections"] == 32);
}

TEST_CASE("sliced W1 is translation invariant") {
  RngStream rng(12, 0);
  auto a = gaussian(400, 2, rng), b = gaussian(400, 2, rng, 0.5);
  Eigen::RowVector2d s(3.0, -2.0);
  EmpiricalMeasure as = a.rowwise() + s, bs = b.rowwise() + s;
  CHECK(std::abs(w1_sliced(as, bs, {64, 2, 0}).value - w1_sliced(a, b, {64, 2, 0}).value) <= 1e-12);
}

TEST_CASE("sliced W1 grows linearly with a mean shift") {
  // Oracle: for N(0,I) vs N(μ,I) the projected W₁ is |⟨θ, μ⟩|, whose average over
  // the circle is 2|μ|/π. Shared noise makes the ratio test tight.
  RngStream rng(13, 0);
  const std::size_t n = 10000;
  auto a = gaussian(n, 2, rng);
  auto b = gaussian(n, 2, rng);
  EmpiricalMeasure b05 = b, b10 = b;
  b05.col(0).array() += 0.5;
  b10.col(0).array() += 1.0;
  const SlicedOptions opt{256, 5, 0};
  const double v05 = w1_sliced(a, b05, opt).value, v10 = w1_sliced(a, b10, opt).value;
  CHECK(v10 / v05 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(v10 == doctest::Approx(2.0 / M_PI).epsilon(0.05));
}

TEST_CASE("reference-based sliced W1 matches the merge estimator") {
  RngStream rng(14, 0);
  auto ref = gaussian(3000, 2, rng);
  auto a = gaussian(700, 2, rng, 0.3);
  SlicedReference sr(ref, 24, 8);
  auto e = sr.distance(a);
  auto direct = w1_sliced(a, ref, {24, 8, 0});
  CHECK(e.value == doctest::Approx(direct.value).epsilon(1e-10));
  CHECK(e.n_b == 3000);
  // equal-size case with a tie-heavy sample
  EmpiricalMeasure t(6, 1);
  t << 0, 0, 1, 1, 1, 2;
  SlicedReference st(column({0.5, 0.5, 0.5, 2, 2, 3}), 1, 0);
  CHECK(st.distance(t).value == doctest::Approx(w1_exact_1d(t, column({0.5, 0.5, 0.5, 2, 2, 3})).value).epsilon(1e-13));
  auto boot = sr.distance(a, 40, 2);
  CHECK(boot.std_error > 0.0);
  CHECK(boot.value == e.value);
  CHECK_THROWS_AS(sr.distance(EmpiricalMeasure::Zero(3, 3)), UsageError);
}

TEST_CASE("W_f estimator") {
  DistanceFn fn({0.25, 1.0});
  CHECK(wf_empirical(column({1, 2, 3}), column({2, 3, 1}), fn).value == 0.0);
  EmpiricalMeasure two = EmpiricalMeasure::Zero(4, 2);
  CHECK_THROWS_AS(wf_empirical(two, two, fn), UsageError);

  RngStream rng(15, 0);
  auto f = [&](double r) { return fn.f(r); };
  for (int t = 0; t < 30; ++t) {
    auto a = draws(6, rng), b = draws(6, rng);
    auto e = wf_empirical(column(a), column(b), fn);
    CHECK(e.method == DistanceMethod::exact_1d);
    CHECK(e.value == doctest::Approx(permutation_min(a, b, f)).epsilon(1e-13));
    // exhaustive ≤ monotone coupling
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double mono = 0;
    for (int i = 0; i < 6; ++i) mono += f(std::abs(a[i] - b[i])) / 6;
    CHECK(e.value <= mono + 1e-15);
  }
}

TEST_CASE("W_f sandwich holds on every call") {
  RngStream rng(16, 0);
  for (auto p : {DistanceFnParams{0.25, 1.0}, DistanceFnParams{1.0, 2.0}, DistanceFnParams{0.5, 3.3}}) {
    DistanceFn fn(p);
    for (std::size_t n : {1u, 3u, 8u, 10u, 11u, 200u}) {
      auto a = column(draws(n, rng)), b = column(draws(n, rng));
      auto e = wf_empirical(a, b, fn, {20, 1});
      REQUIRE(e.lower.has_value());
      const double w1 = w1_exact_1d(a, b).value;
      CHECK(*e.upper == w1);
      CHECK(e.value <= w1 + 1e-12);
      CHECK(e.value >= 0.5 * std::exp(-p.alpha_f * p.r_f * p.r_f) * w1 - 1e-12);
      CHECK(e.method == (n <= 10 ? DistanceMethod::exact_1d : DistanceMethod::monotone_upper_bound));
    }
  }
}

TEST_CASE("second moment check") {
  Quadratic q(3, 2.0);
  auto X = sample_target(q, 50000, 3);
  auto c = second_moment_check(X, q);
  CHECK(c.mean_sq == doctest::Approx(1.5).epsilon(0.02));
  CHECK(c.bound == doctest::Approx(2 * 3 / 2.0 + 18.0));
  CHECK(c.passed);
  const double radius = 10.0 * std::sqrt(c.bound);
  EmpiricalMeasure far = EmpiricalMeasure::Zero(100, 3);
  far.col(0).setConstant(radius);
  auto bad = second_moment_check(far, q);
  CHECK_FALSE(bad.passed);
  CHECK(bad.margin < 0);
  CHECK_THROWS_AS(second_moment_check(EmpiricalMeasure::Zero(4, 2), q), UsageError);
}
