#include <doctest.h>

#include "lmc/overdamped.hpp"

#include <cmath>

using namespace lmc;

namespace {

struct Blowup final : Potential {
  Blowup() { c_ = {1, 1, 1}; }
  int dim() const override { return 2; }
  double value(const Eigen::Ref<const Vector>&) const override { return 0; }
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> g) const override {
    g = x;
    g(1) = NAN;
  }
  std::string kind() const override { return "blowup"; }
  json spec() const override { return {}; }
};

}  // namespace

TEST_CASE("deterministic steps") {
  Quadratic q(2, 1.0);
  ChainState s{Vector::Zero(2), 0, RngStream(1, 0)};
  od_step(q, s, 0.3, Noise::off);
  CHECK(s.x.norm() == 0.0);
  CHECK(s.step_index == 1);
  s.x << 1, 0;
  od_step(q, s, 0.1, Noise::off);
  CHECK(s.x(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.x(1) == 0.0);
  CHECK_THROWS_AS(od_step(q, s, 0.0), DomainError);
}

TEST_CASE("non-finite gradient names the coordinate") {
  Blowup b;
  ChainState s{Vector::Ones(2), 0, RngStream(1, 0)};
  try {
    od_step(b, s, 0.1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("stationary variance of the AR(1) chain") {
  // x' = (1 - δm) x + √(2δ) ξ has stationary variance 1/(m(1 - δm/2)).
  for (int d : {1, 3}) {
    const double m = 1.0, delta = 0.1;
    Quadratic q(d, m);
    OdEnsemble ens(q, Vector::Zero(d), 20000, 7);
    ens.advance(delta, 300);
    Matrix X = ens.positions();
    const double target = 1.0 / (m * (1.0 - delta * m / 2.0));
    CHECK(target == doctest::Approx(1.0526315789473684));
    for (int j = 0; j < d; ++j) {
      std::vector<double> col(X.rows()), sq(X.rows());
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        col[i] = X(i, j);
        sq[i] = X(i, j) * X(i, j);
      }
      auto mean = mean_se(col);
      auto second = mean_se(sq);
      CHECK(std::abs(mean.mean) <= 3 * mean.std_error);
      CHECK(std::abs(second.mean - target) <= 3 * second.std_error);
    }
  }
}

TEST_CASE("od_run contract") {
  Quadratic q(2, 1.0, 1.0);
  Vector x0(2);
  x0 << 0.5, -0.2;
  auto zero = od_run(q, x0, manual_plan("od", 0.1, 0), 5, 1);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK((zero.x.row(i).transpose() - x0).norm() == 0.0);
  CHECK(zero.warnings.empty());

  auto a = od_run(q, x0, manual_plan("od", 0.05, 50), 64, 99);
  auto b = od_run(q, x0, manual_plan("od", 0.05, 50), 64, 99);
  CHECK(a.x == b.x);
  auto c = od_run(q, x0, manual_plan("od", 0.05, 50), 64, 100);
  CHECK(a.x != c.x);

  // Member i is the serial chain on stream (seed, i).
  ChainState s{x0, 0, RngStream(99, 17)};
  for (int k = 0; k < 50; ++k) od_step(q, s, 0.05);
  CHECK((a.x.row(17).transpose() - s.x).norm() == 0.0);

  Vector far(2);
  far << 3, 0;
  auto w = od_run(q, far, manual_plan("od", 0.05, 1), 2, 1);
  REQUIRE(w.warnings.size() == 1);
  CHECK(w.warnings[0].find("precondition") != std::string::npos);
}
