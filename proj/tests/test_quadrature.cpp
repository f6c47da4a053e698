#include "doctest.h"

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "lfbp/quadrature.hpp"

using namespace lfbp;

TEST_CASE("16-point rule is exact for degree 31") {
  const double v = gauss_legendre([](double t) { return std::pow(t, 31); }, 0.0, 1.0, 1);
  CHECK(v == doctest::Approx(1.0 / 32.0).epsilon(1e-14));
}

TEST_CASE("expectation under an exponential law") {
  // E cos(X), X ~ Exp(r): r^2 / (r^2 + 1).
  for (double r : {0.5, 1.0, 3.0}) {
    const double v = expect_exponential([](double t) { return std::cos(t); }, r);
    CHECK(v == doctest::Approx(r * r / (r * r + 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("rate ladder matches its Laplace transform") {
  // S_n = sum_{j<n} Exp(lambda + j); E exp(-theta S_n) = prod (lambda + j) / (lambda + j + theta).
  const double theta = 0.7;
  for (double lambda : {0.5, 1.0, 2.5}) {
    for (int n : {0, 1, 2, 5, 12}) {
      double expected = 1.0;
      for (int j = 0; j < n; ++j) expected *= (lambda + j) / (lambda + j + theta);
      const double v = expect_rate_ladder([&](double t) { return std::exp(-theta * t); }, lambda, n);
      CHECK(v == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("rate ladder density is a probability density") {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (int n : {1, 2, 4, 9}) {
    const double total = integrator.integrate([&](double t) { return rate_ladder_density(t, 1.5, n); });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("adaptive rule reports non-convergence") {
  QuadratureOptions opt;
  opt.max_panels = 8;
  CHECK_THROWS_AS(integrate_adaptive([](double t) { return std::sin(1.0 / (t + 1e-6)); }, 0.0, 1.0, opt),
                  QuadratureError);
}
