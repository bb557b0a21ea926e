#include <doctest.h>

#include "fn_properties.hpp"
#include "lmc/common.hpp"
#include "lmc/distance_fn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

using namespace lmc;

namespace {

// Independent oracle: Ψ through erf, the outer integrals by Gauss-Kronrod.
struct Oracle {
  double a, R;
  double psi(double r) const { return std::exp(-a * std::min(r * r, R * R)); }
  double Psi(double r) const {
    const double s = std::min(r, R);
    return std::sqrt(M_PI / (4 * a)) * std::erf(std::sqrt(a) * s) + psi(R) * std::max(r - R, 0.0);
  }
  double J(double r) const {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double s) { return Psi(s) / psi(s); }, 0.0, std::min(r, R), 10, 1e-13);
  }
  double g(double r) const { return 1.0 - J(r) / (2.0 * J(R)); }
  double f(double r) const {
    const double JR = J(R);
    auto integrand = [&](double s) { return psi(s) * (1.0 - J(s) / (2.0 * JR)); };
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, std::min(r, R), 8,
                                                                               1e-12);
    if (r > R) v += 0.5 * psi(R) * (r - R);
    return v;
  }
};

}  // namespace

TEST_CASE("psi values") {
  DistanceFn fn({0.25, 1.0});
  CHECK(fn.psi(0.0) == 1.0);
  CHECK(fn.psi(2.0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));
  CHECK(fn.psi(0.5) == doctest::Approx(0.9394130628134758).epsilon(1e-15));
  CHECK_THROWS_AS(fn.psi(-0.1), DomainError);
  CHECK_THROWS_AS(fn.f(-1.0), DomainError);
  CHECK_THROWS_AS(DistanceFn({0.0, 1.0}), UsageError);
  CHECK_THROWS_AS(DistanceFn({1.0, -1.0}), UsageError);
}

TEST_CASE("capital psi against erf and quadrature") {
  DistanceFn fn({0.25, 1.0});
  CHECK(fn.capital_psi(0.0) == 0.0);
  CHECK(fn.capital_psi(1.0) == doctest::Approx(0.9225620128255849).epsilon(1e-10));
  for (double r : {0.1, 0.37, 0.8, 1.0}) {
    const double ref = std::sqrt(M_PI / (4 * 0.25)) * std::erf(std::sqrt(0.25) * r);
    CHECK(std::abs(fn.capital_psi(r) - ref) <= 1e-10);
  }
  for (double r : {1.5, 4.0}) CHECK(fn.capital_psi(r) <= r);
  // α → 0: ψ ≡ 1, Ψ(r) = r.
  DistanceFn flat({1e-14, 1.0});
  CHECK(flat.capital_psi(0.7) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(flat.capital_psi(3.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("g and f against nested quadrature oracle") {
  DistanceFn fn({0.25, 1.0});
  Oracle o{0.25, 1.0};
  CHECK(fn.g(0.0) == 1.0);
  CHECK(fn.g(10.0) == 0.5);
  CHECK(fn.g(0.5) == doctest::Approx(0.8828056118777406).epsilon(1e-10));
  CHECK(fn.g(0.5) > 0.5);
  CHECK(fn.g(0.5) < 1.0);
  CHECK(fn.f(2.0) == doctest::Approx(1.1732525609880494).epsilon(1e-10));
  CHECK(fn.f(0.5) == doctest::Approx(0.47111869465994835).epsilon(1e-10));
  CHECK(fn.f(2.0) >= std::exp(-0.25));
  CHECK(fn.f(2.0) <= 2.0);
  auto [f0, fp0] = fn.f_and_fprime(0.0);
  CHECK(f0 == 0.0);
  CHECK(fp0 == 1.0);

  for (auto [a, R] : {std::pair{0.25, 1.0}, {1.0, 2.0}, {0.5, std::sqrt(11.0)}}) {
    DistanceFn F({a, R});
    Oracle O{a, R};
    for (double r : {0.05 * R, 0.3 * R, 0.77 * R, R, 1.9 * R}) {
      CHECK(std::abs(F.capital_psi(r) - O.Psi(r)) <= 1e-10);
      CHECK(std::abs(F.g(r) - O.g(r)) <= 1e-9);
      CHECK(std::abs(F.f(r) - O.f(r)) <= 1e-9);
    }
  }
}

TEST_CASE("f'' finite difference agrees with closed form") {
  DistanceFn fn({1.0, 2.0});
  for (double r : {0.0, 0.1, 0.5, 1.0, 1.7, 1.99}) {
    CHECK(fn.fprime2_fd(r) == doctest::Approx(fn.fprime2_closed(r)).epsilon(1e-6).scale(1.0));
  }
  CHECK(fn.fprime2_fd(3.0) == 0.0);
  CHECK(fn.fprime2_closed(3.0) == 0.0);
}

TEST_CASE("properties F1-F6 on reference parameter sets") {
  for (auto [a, R] : {std::pair{0.25, 1.0}, {1.0, 2.0}, {0.25, 1.0 * std::sqrt(11.0)}, {0.5, 4 * std::sqrt(11.0)}}) {
    DistanceFn fn({a, R});
    auto rep = testing::check_fn_properties(fn);
    INFO("alpha=" << a << " R=" << R << " f4=" << rep.f4 << " f4_2a=" << rep.f4_2a << " f5=" << rep.f5_concave
                  << " flat=" << rep.f5_flat << " f6=" << rep.f6);
    CHECK(rep.passed());
    CHECK(rep.table_increment < 1.0);
  }
}

TEST_CASE("linear extrapolation beyond the table") {
  DistanceFn fn({1.0, 2.0});
  const double s = 0.5 * fn.psi_cap();
  CHECK(fn.f(25.0) - fn.f(20.0) == doctest::Approx(5 * s).epsilon(1e-12));
  CHECK(fn.fprime(100.0) == doctest::Approx(s).epsilon(1e-15));
}

TEST_CASE("csv dump") {
  DistanceFn fn({0.25, 1.0}, 1e-10, 64);
  std::ostringstream os;
  fn.dump_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("r,psi,Psi,g,f,fprime\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 65 + 64);
}
