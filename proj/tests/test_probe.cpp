#include "doctest.h"

#include <cmath>
#include <numbers>

#include "lfbp/probe.hpp"

using namespace lfbp;

TEST_CASE("probe kinds") {
  CHECK(parse_probe("const")(3.0) == 1.0);
  CHECK(parse_probe("const:0.25")(3.0) == 0.25);
  CHECK(parse_probe("exp:2")(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const Probe ind = parse_probe("ind:1:2");
  CHECK(ind(0.99) == 0.0);
  CHECK(ind(1.0) == 1.0);
  CHECK(ind(2.0) == 1.0);
  CHECK(ind(2.01) == 0.0);
  CHECK_FALSE(ind.smooth);
  CHECK(parse_probe("expr:y^2")(3.0) == 9.0);
  CHECK(parse_probe("exp:1").source == "exp:1");
}

TEST_CASE("finite states are seen as their index") {
  const Probe p = parse_probe("expr:y + 1");
  CHECK(p.fn(TypePoint::finite(2)) == 3.0);
}

TEST_CASE("expression grammar") {
  auto at = [](const std::string& f, double y) { return compile_expression(f)(y); };
  CHECK(at("1 + 2 * 3", 0) == 7.0);
  CHECK(at("(1 + 2) * 3", 0) == 9.0);
  CHECK(at("2 ^ 3 ^ 2", 0) == 512.0);
  CHECK(at("-y ^ 2", 3) == -9.0);
  CHECK(at("2 ^ -1", 0) == 0.5);
  CHECK(at("8 / 4 / 2", 0) == 1.0);
  CHECK(at("10 - 4 - 3", 0) == 3.0);
  CHECK(at("1.5e2 + y", 1) == 151.0);
  CHECK(at("exp(-y) * sqrt(4)", 0) == 2.0);
  CHECK(at("min(y, 2) + max(y, 2)", 5) == 7.0);
  CHECK(at("abs(sin(pi))", 0) <= 1e-15);
  CHECK(at("log(e)", 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at("tanh(0) + cos(0)", 0) == 1.0);
}

TEST_CASE("malformed probes are rejected") {
  for (const char* bad : {"", "exp", "exp:x", "ind:1", "ind:2:1", "gauss:1", "expr:", "expr:y +",
                          "expr:(y", "expr:foo(y)", "expr:z", "expr:min(y)", "expr:y y", "const:1a"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_probe(bad), ProbeError);
  }
}

TEST_CASE("indicators are refused for nested exponential-family integrals") {
  const Probe ind = parse_probe("ind:0:1");
  CHECK_THROWS_AS(require_nested_integrable(ind, Triplet(ExpFamilyTriplet(1.0, 1.0, 1.0))), ProbeError);
  CHECK_NOTHROW(require_nested_integrable(parse_probe("exp:1"), Triplet(ExpFamilyTriplet(1.0, 1.0, 1.0))));
  CHECK_NOTHROW(require_nested_integrable(ind, Triplet(FiniteTriplet(Eigen::MatrixXd::Constant(1, 1, 0.5),
                                                                     Eigen::VectorXd::Ones(1), 1.0))));
}
