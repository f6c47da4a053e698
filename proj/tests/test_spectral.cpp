#include "doctest.h"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_pFq.hpp>

#include "lfbp/perron.hpp"
#include "lfbp/spectral.hpp"
#include "test_support.hpp"

using namespace lfbp;
using lfbp::testing::random_finite;
using lfbp::testing::scalar;

namespace {

double direct_f(const FiniteTriplet& t, double s, int terms = 4000) {
  Eigen::RowVectorXd row = t.gamma().transpose();
  double sum = 0.0;
  for (int n = 1; n <= terms; ++n) {
    row = s * row * t.K();
    sum += row.sum();
  }
  return sum;
}

double max_abs_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("scalar kernel closed forms") {
  // f(s) = k s / (1 - k s); m f(R) = 1 gives R = 1 / (k (1 + m)); beta = 1 / (1 - k R).
  const FiniteTriplet t = scalar(0.4, 1.0);
  const SpectralSummary s = analyze(Triplet(t));
  CHECK(s.R == doctest::Approx(1.25).epsilon(1e-11));
  CHECK(s.rho == doctest::Approx(0.8).epsilon(1e-11));
  CHECK(s.beta == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s.criticality == Criticality::subcritical);
  CHECK(s.recurrence == Recurrence::positive);
  CHECK(s.m_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const SpectralSummary c = analyze(Triplet(scalar(0.5, 1.0)));
  CHECK(c.criticality == Criticality::critical);
  REQUIRE(c.alpha.has_value());
  CHECK(std::abs(*c.alpha) <= 1e-11);

  const SpectralSummary p = analyze(Triplet(scalar(0.75, 1.0)));
  CHECK(p.criticality == Criticality::supercritical);
  CHECK(p.rho == doctest::Approx(1.5).epsilon(1e-11));
}

TEST_CASE("finite f agrees with direct summation") {
  Rng rng(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const FiniteTriplet t = random_finite(rng, 1 + trial % 4);
    const LifeLengthLaw law = life_length_law(t);
    for (double frac : {0.2, 0.6, 0.9}) {
      const double s = frac * law.R_star();
      CHECK(f_eval(law, s) == doctest::Approx(direct_f(t, s, 20000)).epsilon(1e-9));
    }
  }
}

TEST_CASE("f' matches a central difference") {
  const LifeLengthLaw fin = life_length_law(random_finite(*std::make_unique<Rng>(5, 0), 3));
  const LifeLengthLaw exp = life_length_law(ExpFamilyTriplet(0.8, 1.7, 1.0));
  for (const LifeLengthLaw* law : {&fin, &exp}) {
    const double s = std::isfinite(law->R_star()) ? 0.5 * law->R_star() : 1.3;
    const double h = 1e-5 * s;
    const double fd = (f_eval(*law, s + h) - f_eval(*law, s - h)) / (2 * h);
    CHECK(f_derivative(*law, s) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("exponential family f is the hypergeometric Phi(lambda s) - 1") {
  // lambda = mu = 1: Phi(s) = (e^s - 1) / s.
  const LifeLengthLaw law = life_length_law(ExpFamilyTriplet(1.0, 1.0, 1.0));
  for (double s : {0.3, 1.0, 2.5}) {
    CHECK(f_eval(law, s) == doctest::Approx(std::expm1(s) / s - 1.0).epsilon(1e-13));
  }
  CHECK(std::abs(f_eval(law, 1.0) - (std::numbers::e - 2.0)) <= 1e-12);

  for (double lambda : {0.5, 2.0}) {
    for (double mu : {0.7, 3.0}) {
      for (double s : {0.4, 2.0}) {
        const double oracle = boost::math::hypergeometric_pFq({1.0, mu}, {lambda, mu + 1.0}, s);
        CHECK(hypergeom_phi(lambda, mu, s) == doctest::Approx(oracle).epsilon(1e-12));
        const LifeLengthLaw l = life_length_law(ExpFamilyTriplet(lambda, mu, 1.0));
        CHECK(f_eval(l, s) == doctest::Approx(boost::math::hypergeometric_pFq({1.0, mu}, {lambda, mu + 1.0}, lambda * s) - 1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("Malthusian parameter of lambda = mu = 1, m = 2") {
  // 2 ((e^R - 1) / R - 1) = 1.
  const SpectralSummary s = analyze(Triplet(ExpFamilyTriplet(1.0, 1.0, 2.0)));
  CHECK(s.criticality == Criticality::supercritical);
  CHECK(std::abs(2.0 * (std::expm1(s.R) / s.R - 1.0) - 1.0) <= 1e-11);
  REQUIRE(s.alpha.has_value());
  CHECK(*s.alpha == doctest::Approx(-std::log(s.R)).epsilon(1e-14));
  CHECK(*s.alpha == doctest::Approx(0.27091).epsilon(1e-4));
  CHECK(s.mean_life == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-12));
}

TEST_CASE("critical m of lambda = mu = 1") {
  const double m_star = 1.0 / (std::numbers::e - 2.0);
  const LifeLengthLaw law = life_length_law(ExpFamilyTriplet(1.0, 1.0, m_star));
  CHECK(std::abs(m_star * f_eval(law, 1.0) - 1.0) <= 1e-10);
  CHECK(classify(law, m_star) == Criticality::critical);
}

TEST_CASE("transient life-length law") {
  // d_n = 1 / (n + 1)^3: R* = 1, f(1) = zeta(3) - 1 < 1 / m for m = 2.
  const double f1 = 1.2020569031595942 - 1.0;
  const LifeLengthLaw law = LifeLengthLaw::sequence(
      [](int n) { return 1.0 / std::pow(n + 1.0, 3); }, 1.0, f1, 1.6449340668482264 - f1);
  const SpectralSummary s = solve_R(law, 2.0);
  CHECK(s.recurrence == Recurrence::transient);
  CHECK(s.R == 1.0);
  CHECK_FALSE(s.alpha.has_value());
}

TEST_CASE("R against the Perron root of the mean matrix") {
  Rng rng(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteTriplet t = random_finite(rng, 1 + trial % 5);
    const SpectralSummary s = analyze(Triplet(t));
    CHECK(s.rho == doctest::Approx(max_abs_eigenvalue(t.mean_matrix())).epsilon(1e-9));
    CHECK(spectral_radius(t.mean_matrix()) == doctest::Approx(max_abs_eigenvalue(t.mean_matrix())).epsilon(1e-9));
  }
}

TEST_CASE("eigen-pair identities and eigen relations, finite family") {
  Rng rng(23, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const FiniteTriplet t = random_finite(rng, 2 + trial % 3);
    const SpectralSummary s = analyze(Triplet(t));
    const Eigenpair e = eigen_build(t, s);
    const Eigen::VectorXd& u = *e.u_vector;
    const Eigen::VectorXd& nu = *e.nu_vector;
    const double m = t.m();
    CHECK(t.gamma().dot(u) == doctest::Approx((1.0 + m) / m).epsilon(1e-9));
    CHECK(nu.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(nu.dot(u) == doctest::Approx(s.beta).epsilon(1e-8));
    const Eigen::MatrixXd M = t.mean_matrix();
    CHECK((s.R * M * u - u).cwiseAbs().maxCoeff() <= 1e-9 * u.cwiseAbs().maxCoeff());
    CHECK((s.R * nu.transpose() * M - nu.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("eigen-pair identities, exponential family") {
  const ExpFamilyTriplet t(1.2, 0.9, 1.5);
  const SpectralSummary s = analyze(Triplet(t));
  const Eigenpair e = eigen_build(t, s);
  const double m = t.m();
  CHECK(t.immigration().integrate(e.u) == doctest::Approx((1.0 + m) / m).epsilon(1e-8));
  CHECK(e.nu_integrate(constant_function(1.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.nu_integrate(e.u) == doctest::Approx(s.beta).epsilon(1e-7));
  // R M u = u at a few points.
  for (double x : {0.3, 1.0, 2.5}) {
    CHECK(s.R * mean_apply(t, e.u, TypePoint::real(x)) == doctest::Approx(e.u(TypePoint::real(x))).epsilon(1e-7));
  }
  // R nu M = nu, tested on w(y) = e^{-y}, for which M w is explicit.
  const double lambda = t.lambda(), mu = t.mu();
  const TestFunction w = [](const TypePoint& p) { return std::exp(-p.value()); };
  const TestFunction Mw = [&](const TypePoint& p) {
    const double x = p.value();
    return std::exp(-x) * lambda * std::exp(-x) / (lambda + 1.0) + m * std::exp(-x) * mu / (mu + 1.0);
  };
  CHECK(s.R * e.nu_integrate(Mw) == doctest::Approx(e.nu_integrate(w)).epsilon(1e-8));
}

TEST_CASE("resolvent identity: int K^{(s)}(x, E) gamma(dx) = 1 + f(s)") {
  const FiniteTriplet t = random_finite(*std::make_unique<Rng>(29, 0), 3);
  const LifeLengthLaw law = life_length_law(t);
  const double s = 0.7 * law.R_star();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.dim(); ++i) acc += t.gamma()(i) * k_resolvent_mass(t, TypePoint::finite(i), s);
  CHECK(acc == doctest::Approx(1.0 + f_eval(law, s)).epsilon(1e-12));

  const ExpFamilyTriplet e(1.4, 0.6, 1.0);
  const LifeLengthLaw le = life_length_law(e);
  const double integral = e.immigration().integrate([&](const TypePoint& p) { return k_resolvent_mass(e, p, 1.7); });
  CHECK(integral == doctest::Approx(1.0 + f_eval(le, 1.7)).epsilon(1e-9));
}

TEST_CASE("R^n M^n(x, E) for the scalar kernel is identically one") {
  const Triplet t = scalar(0.4, 1.0);
  const PfLimitReport r = pf_limit_check(t, analyze(t), TypePoint::finite(0), 30);
  CHECK(r.limit == doctest::Approx(1.0).epsilon(1e-10));
  for (const auto& row : r.rows) CHECK(row.scaled_mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("states outside E_R have infinite resolvent") {
  // State 1 is absorbing with K(1, 1) = 0.9 and unreachable from gamma = delta_0.
  Eigen::MatrixXd K(2, 2);
  K << 0.3, 0.0, 0.0, 0.9;
  Eigen::VectorXd g(2);
  g << 1.0, 0.0;
  const FiniteTriplet t(K, g, 1.0);
  const SpectralSummary s = analyze(Triplet(t));
  CHECK(s.R == doctest::Approx(1.0 / (0.3 * 2.0)).epsilon(1e-10));
  CHECK(std::isinf(k_resolvent_mass(t, TypePoint::finite(1), s.R)));
  CHECK(std::isfinite(k_resolvent_mass(t, TypePoint::finite(0), s.R)));
}
