#include "lfbp/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <numbers>

namespace lfbp {
namespace {

constexpr int kOrder = 16;

struct Rule {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};
};

// Newton iteration on P_16 from the Chebyshev initial guesses.
Rule make_rule() {
  Rule r;
  for (int i = 0; i < kOrder; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= kOrder; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

}  // namespace

double gauss_legendre(const ScalarFunction& h, double a, double b, int panels) {
  const Rule& r = rule();
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    double s = 0.0;
    for (int i = 0; i < kOrder; ++i) s += r.weights[i] * h(mid + half * r.nodes[i]);
    total += half * s;
  }
  return total;
}

double integrate_adaptive(const ScalarFunction& h, double a, double b,
                          const QuadratureOptions& opt) {
  // Each panel carries its one-panel value and the value on its two halves;
  // their difference is the panel's error estimate. The worst panel is
  // halved until the summed estimate meets the tolerance, so a jump in h
  // only refines the panels around it.
  struct Panel {
    double a, b, coarse, fine;
    double err() const { return std::abs(fine - coarse); }
    bool operator<(const Panel& o) const { return err() < o.err(); }
  };
  auto make = [&](double lo, double hi, double coarse) {
    const double mid = 0.5 * (lo + hi);
    return Panel{lo, hi, coarse, gauss_legendre(h, lo, mid, 1) + gauss_legendre(h, mid, hi, 1)};
  };
  std::priority_queue<Panel> queue;
  const int initial = std::max(1, opt.initial_panels);
  for (int i = 0; i < initial; ++i) {
    const double lo = a + (b - a) * i / initial, hi = a + (b - a) * (i + 1) / initial;
    queue.push(make(lo, hi, gauss_legendre(h, lo, hi, 1)));
  }
  int panels = initial;
  while (true) {
    double total = 0.0, err = 0.0;
    std::priority_queue<Panel> copy = queue;
    while (!copy.empty()) {
      total += copy.top().fine;
      err += copy.top().err();
      copy.pop();
    }
    if (err < opt.abs_tol * std::max(1.0, std::abs(total))) return total;
    if (panels >= opt.max_panels) {
      throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "]",
                            total, err);
    }
    const Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    queue.push(make(worst.a, mid, gauss_legendre(h, worst.a, mid, 1)));
    queue.push(make(mid, worst.b, gauss_legendre(h, mid, worst.b, 1)));
    ++panels;
  }
}

double expect_exponential(const ScalarFunction& h, double rate, const QuadratureOptions& opt) {
  const double cutoff = -std::log(opt.tail_mass) / rate;
  return integrate_adaptive([&](double y) { return h(y) * rate * std::exp(-rate * y); }, 0.0,
                            cutoff, opt);
}

double rate_ladder_density(double t, double lambda, int n) {
  if (t <= 0.0) return n == 1 ? lambda : 0.0;
  const double log_norm = std::lgamma(lambda + n) - std::lgamma(lambda) - std::lgamma(n);
  const double log_body = -lambda * t + (n - 1) * std::log(-std::expm1(-t));
  return std::exp(log_norm + log_body);
}

double expect_rate_ladder(const ScalarFunction& h, double lambda, int n,
                          const QuadratureOptions& opt) {
  if (n == 0) return h(0.0);
  if (n == 1) return expect_exponential(h, lambda, opt);
  // P(S > T) <= C exp(-lambda T) / lambda with C the Beta normalizer.
  const double log_norm = std::lgamma(lambda + n) - std::lgamma(lambda) - std::lgamma(n);
  const double cutoff = (log_norm - std::log(lambda) - std::log(opt.tail_mass)) / lambda;
  return integrate_adaptive([&](double t) { return h(t) * rate_ladder_density(t, lambda, n); },
                            0.0, std::max(cutoff, 1.0), opt);
}

}  // namespace lfbp
