#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace lfbp {

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}
  double estimate() const { return estimate_; }
  /// Difference between the last two refinements.
  double error() const { return error_; }

 private:
  double estimate_;
  double error_;
};

struct QuadratureOptions {
  /// Successive refinements must agree within abs_tol * max(1, |I|).
  double abs_tol = 1e-10;
  /// Mass discarded beyond the cutoff of an exponentially decaying weight.
  double tail_mass = 1e-12;
  int initial_panels = 8;
  int max_panels = 1 << 14;
};

/// For the inner integral of a nested pair: the outer refinement cannot settle
/// below the noise of the inner one.
inline constexpr QuadratureOptions kInnerQuadrature{1e-13, 1e-12, 8, 1 << 14};

using ScalarFunction = std::function<double(double)>;

/// Composite 16-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
double gauss_legendre(const ScalarFunction& h, double a, double b, int panels);

/// Doubles the panel count until successive results agree.
double integrate_adaptive(const ScalarFunction& h, double a, double b,
                          const QuadratureOptions& opt = {});

/// E[h(Y)] for Y ~ Exp(rate), with bounded h.
double expect_exponential(const ScalarFunction& h, double rate,
                          const QuadratureOptions& opt = {});

/// E[h(S)] where S is the sum of independent exponentials with rates
/// lambda, lambda + 1, ..., lambda + n - 1 (equivalently S = -ln B with
/// B ~ Beta(lambda, n)). For n = 0, S = 0.
double expect_rate_ladder(const ScalarFunction& h, double lambda, int n,
                          const QuadratureOptions& opt = {});

/// Density of the rate-ladder sum above at t > 0 (n >= 1).
double rate_ladder_density(double t, double lambda, int n);

}  // namespace lfbp
