#include "lfbp/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "lfbp/perron.hpp"
#include "lfbp/quadrature.hpp"

namespace lfbp {
namespace {

constexpr double kSeriesRelTol = 1e-17;
constexpr int kMaxSeriesTerms = 100000;
constexpr int kMaxTableLength = 100000;
constexpr double kTableFloor = 1e-17;

// Sums term(n) for n >= first. ratio_bound(n) bounds |t_{k+1} / t_k| for all
// k >= n; the remainder after t_n is then at most |t_n| r / (1 - r).
template <typename Term, typename Ratio>
double certified_sum(Term term, Ratio ratio_bound, int first, const char* what) {
  double sum = 0.0;
  double bound = kInfinity;
  for (int n = first; n < first + kMaxSeriesTerms; ++n) {
    const double t = term(n);
    if (!std::isfinite(t)) return kInfinity;
    sum += t;
    const double r = ratio_bound(n);
    if (r < 1.0) {
      bound = std::abs(t) * r / (1.0 - r);
      if (bound <= kSeriesRelTol * std::abs(sum) || bound == 0.0) return sum;
    }
  }
  throw SeriesError(std::string(what) + ": series truncation failed", sum, bound);
}

Eigen::MatrixXd restrict(const Eigen::MatrixXd& K, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = K(idx[i], idx[j]);
  }
  return out;
}

std::vector<Eigen::Index> gamma_support(const Eigen::VectorXd& gamma) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (gamma(i) > 0.0) s.push_back(i);
  }
  return s;
}

double exp_log_tail(double lambda, double mu, int n) {
  return exp_family_log_kn_mass(lambda, 0.0, n) + std::log(mu) - std::log(mu + n);
}

// sum_{n >= 1} (s lambda e^{-x})^n Gamma(lambda) / Gamma(lambda + n) = K^{(s)}(x, E) - 1.
double exp_resolvent_excess(double lambda, double x, double s) {
  if (s == 0.0) return 0.0;
  const double log_s = std::log(s);
  return certified_sum(
      [&](int n) { return std::exp(exp_family_log_kn_mass(lambda, x, n) + n * log_s); },
      [&](int n) { return s * lambda * std::exp(-x) / (lambda + n); }, 1, "K^(s)(x, E)");
}

// Weights s^n d_n, n = 0..N, truncated once the certified remainder is
// below 1e-16 of the total.
std::vector<double> exp_resolvent_weights(double lambda, double mu, double s) {
  std::vector<double> w{1.0};
  if (s == 0.0) return w;
  double total = 1.0;
  for (int n = 1; n < kMaxSeriesTerms; ++n) {
    const double t = std::exp(exp_log_tail(lambda, mu, n) + n * std::log(s));
    w.push_back(t);
    total += t;
    const double r = s * lambda / (lambda + n);
    if (r < 1.0 && t * r / (1.0 - r) <= 1e-16 * total) return w;
  }
  throw SeriesError("resolvent weights: truncation failed", total, kInfinity);
}

// E[g(V_n + S_n)], the normalized n-step law started from gamma.
double exp_gamma_kn_expect(const ExpFamilyTriplet& t, const TestFunction& g, int n) {
  const double rate = t.mu() + n;
  const auto inner = [&](double s) {
    return expect_exponential([&](double v) { return g(TypePoint::real(v + s)); }, rate,
                              kInnerQuadrature);
  };
  return expect_rate_ladder(inner, t.lambda(), n);
}

}  // namespace

// LifeLengthLaw ---------------------------------------------------------------------

LifeLengthLaw::LifeLengthLaw(std::variant<Finite, Exp, Sequence> backend)
    : backend_(std::move(backend)) {
  if (const auto* f = std::get_if<Finite>(&backend_)) {
    R_star_ = f->radius > 0.0 ? 1.0 / f->radius : kInfinity;
  } else if (std::holds_alternative<Exp>(backend_)) {
    R_star_ = kInfinity;
  } else {
    R_star_ = std::get<Sequence>(backend_).R_star;
  }

  table_.push_back(1.0);
  if (const auto* f = std::get_if<Finite>(&backend_)) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(f->K.rows());
    while (table_.size() < kMaxTableLength && table_.back() >= kTableFloor) {
      v = f->K * v;
      const double d = f->gamma.dot(v);
      table_.push_back(std::clamp(d, 0.0, table_.back()));
    }
  } else {
    while (table_.size() < kMaxTableLength && table_.back() >= kTableFloor) {
      const double d = tail(static_cast<int>(table_.size()));
      table_.push_back(std::clamp(d, 0.0, table_.back()));
    }
  }
}

LifeLengthLaw LifeLengthLaw::finite(const FiniteTriplet& triplet) {
  const auto reach = reachable_states(triplet.K(), gamma_support(triplet.gamma()));
  Finite f;
  f.K = restrict(triplet.K(), reach);
  f.gamma.resize(static_cast<Eigen::Index>(reach.size()));
  for (std::size_t i = 0; i < reach.size(); ++i) f.gamma(i) = triplet.gamma()(reach[i]);
  f.radius = spectral_radius(f.K);
  return LifeLengthLaw(std::move(f));
}

LifeLengthLaw LifeLengthLaw::exp_family(double lambda, double mu) {
  if (!(lambda > 0.0) || !(mu > 0.0)) throw InvalidTriplet("lambda, mu: must be positive");
  return LifeLengthLaw(Exp{lambda, mu});
}

LifeLengthLaw LifeLengthLaw::sequence(std::function<double(int)> tail, double R_star,
                                      double f_at_R_star, double fprime_at_R_star) {
  return LifeLengthLaw(Sequence{std::move(tail), R_star, f_at_R_star, fprime_at_R_star});
}

double LifeLengthLaw::tail(int n) const {
  if (n < 0) throw std::invalid_argument("tail: n must be non-negative");
  if (n == 0) return 1.0;
  if (static_cast<std::size_t>(n) < table_.size()) return table_[n];
  return std::visit(
      [n](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, LifeLengthLaw::Finite>) {
          Eigen::VectorXd v = Eigen::VectorXd::Ones(b.K.rows());
          for (int k = 0; k < n; ++k) v = b.K * v;
          return b.gamma.dot(v);
        } else if constexpr (std::is_same_v<B, LifeLengthLaw::Exp>) {
          return exp_family_tail(b.lambda, b.mu, n);
        } else {
          return b.tail(n);
        }
      },
      backend_);
}

double LifeLengthLaw::f_at_R_star() const {
  return std::visit(
      [this](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, LifeLengthLaw::Finite>) {
          if (b.radius > 0.0) return kInfinity;
          // Nilpotent: f is a polynomial.
          return tail(1) > 0.0 ? kInfinity : 0.0;
        } else if constexpr (std::is_same_v<B, LifeLengthLaw::Exp>) {
          return kInfinity;
        } else {
          return b.f_at_R_star;
        }
      },
      backend_);
}

LifeLengthLaw life_length_law(const FiniteTriplet& triplet) {
  return LifeLengthLaw::finite(triplet);
}

LifeLengthLaw life_length_law(const ExpFamilyTriplet& triplet) {
  return LifeLengthLaw::exp_family(triplet.lambda(), triplet.mu());
}

LifeLengthLaw life_length_law(const Triplet& triplet) {
  return std::visit([](const auto& t) { return life_length_law(t); }, triplet);
}

// Generating functions ----------------------------------------------------------------

double f_eval(const LifeLengthLaw& law, double s) {
  if (s < 0.0) throw std::invalid_argument("f_eval: s must be non-negative");
  if (s == 0.0) return 0.0;
  if (s > law.R_star()) return kInfinity;
  if (s == law.R_star()) return law.f_at_R_star();
  return std::visit(
      [&](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, LifeLengthLaw::Finite>) {
          if (b.radius * s >= 1.0) return kInfinity;
          const Eigen::Index d = b.K.rows();
          const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d) - s * b.K;
          const Eigen::VectorXd mass = b.K.rowwise().sum();
          return s * b.gamma.dot(A.partialPivLu().solve(mass));
        } else if constexpr (std::is_same_v<B, LifeLengthLaw::Exp>) {
          const double log_s = std::log(s);
          return certified_sum(
              [&](int n) { return std::exp(exp_log_tail(b.lambda, b.mu, n) + n * log_s); },
              [&](int n) { return b.lambda * s / (b.lambda + n); }, 1, "f(s)");
        } else {
          double sum = 0.0;
          for (int n = 1; n < kMaxSeriesTerms; ++n) {
            const double t = b.tail(n) * std::pow(s, n);
            sum += t;
            const double next = b.tail(n + 1) * std::pow(s, n + 1);
            const double q = t > 0.0 ? next / t : 0.0;
            if (q < 1.0 && next / (1.0 - q) <= kSeriesRelTol * sum) return sum;
          }
          throw SeriesError("f(s): series truncation failed", sum, kInfinity);
        }
      },
      law.backend());
}

double f_derivative(const LifeLengthLaw& law, double s) {
  if (s < 0.0) throw std::invalid_argument("f_derivative: s must be non-negative");
  if (s > law.R_star()) return kInfinity;
  if (s == law.R_star()) {
    if (const auto* q = std::get_if<LifeLengthLaw::Sequence>(&law.backend())) {
      return q->fprime_at_R_star;
    }
    return kInfinity;
  }
  if (s == 0.0) return law.tail(1);
  return std::visit(
      [&](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, LifeLengthLaw::Finite>) {
          if (b.radius * s >= 1.0) return kInfinity;
          const Eigen::Index d = b.K.rows();
          const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d) - s * b.K;
          const Eigen::VectorXd right = A.partialPivLu().solve(Eigen::VectorXd::Ones(d));
          const Eigen::RowVectorXd left = A.transpose().partialPivLu().solve(b.gamma).transpose();
          return left * b.K * right;
        } else if constexpr (std::is_same_v<B, LifeLengthLaw::Exp>) {
          const double log_s = std::log(s);
          return certified_sum(
              [&](int n) {
                return n * std::exp(exp_log_tail(b.lambda, b.mu, n) + (n - 1) * log_s);
              },
              [&](int n) { return (n + 1.0) / n * b.lambda * s / (b.lambda + n); }, 1, "f'(s)");
        } else {
          double sum = 0.0;
          for (int n = 1; n < kMaxSeriesTerms; ++n) {
            const double t = n * b.tail(n) * std::pow(s, n - 1);
            sum += t;
            const double next = (n + 1) * b.tail(n + 1) * std::pow(s, n);
            const double q = t > 0.0 ? next / t : 0.0;
            if (q < 1.0 && next / (1.0 - q) <= kSeriesRelTol * sum) return sum;
          }
          throw SeriesError("f'(s): series truncation failed", sum, kInfinity);
        }
      },
      law.backend());
}

double hypergeom_phi(double lambda, double mu, double s) {
  if (!(lambda > 0.0) || !(mu > 0.0)) {
    throw std::invalid_argument("hypergeom_phi: lambda and mu must be positive");
  }
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    term *= s * (mu + n) / ((lambda + n) * (mu + n + 1.0));
    sum += term;
    const double r = std::abs(s) / (lambda + n + 1.0);
    if (r < 1.0 && std::abs(term) * r / (1.0 - r) <= kSeriesRelTol * std::abs(sum)) return sum;
  }
  throw SeriesError("hypergeom_phi: series truncation failed", sum, kInfinity);
}

// Root and classification --------------------------------------------------------------

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

std::string to_string(Recurrence r) {
  switch (r) {
    case Recurrence::positive: return "R-positive";
    case Recurrence::null: return "R-null";
    case Recurrence::transient: return "R-transient";
  }
  return "?";
}

SpectralSummary solve_R(const LifeLengthLaw& law, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("solve_R: m must be positive");
  SpectralSummary out;
  out.m = m;
  out.R_star = law.R_star();
  const double target = 1.0 / m;
  const double f_star = law.f_at_R_star();

  if (f_star < target) {
    out.R = out.R_star;
    out.recurrence = Recurrence::transient;
    out.rho = std::isfinite(out.R) ? 1.0 / out.R : 0.0;
    out.beta = std::isfinite(out.R) ? m * out.R * f_derivative(law, out.R) : kInfinity;
    return out;
  }

  if (f_star == target) {
    out.R = out.R_star;
  } else {
    double lo = 0.0;
    double hi = std::isfinite(out.R_star) ? out.R_star : 1.0;
    if (!std::isfinite(out.R_star)) {
      int doublings = 0;
      while (f_eval(law, hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > kMaxBisections) {
          throw BracketError("solve_R: no upper bracket for m f(s) = 1", lo, hi);
        }
      }
    }
    int it = 0;
    while (hi - lo > kRootTolerance * hi) {
      if (++it > kMaxBisections) {
        throw BracketError("solve_R: bisection budget exhausted", lo, hi);
      }
      const double mid = 0.5 * (lo + hi);
      if (f_eval(law, mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.bisections = it;
    out.R = 0.5 * (lo + hi);
  }
  const double fp = f_derivative(law, out.R);
  out.recurrence = std::isfinite(fp) ? Recurrence::positive : Recurrence::null;
  out.rho = 1.0 / out.R;
  out.alpha = -std::log(out.R);
  out.beta = m * out.R * fp;
  return out;
}

Criticality classify(const LifeLengthLaw& law, double m) {
  const double v = m * f_eval(law, 1.0);
  if (std::abs(v - 1.0) <= kCriticalTolerance) return Criticality::critical;
  return v < 1.0 ? Criticality::subcritical : Criticality::supercritical;
}

SpectralSummary analyze(const LifeLengthLaw& law, double m) {
  SpectralSummary s = solve_R(law, m);
  const double f1 = f_eval(law, 1.0);
  s.m_f1 = m * f1;
  s.mean_life = 1.0 + f1;
  s.criticality = classify(law, m);
  return s;
}

SpectralSummary analyze(const Triplet& triplet) {
  return analyze(life_length_law(triplet), as_lf(triplet).m());
}

// Resolvents --------------------------------------------------------------------------

double k_resolvent_mass(const FiniteTriplet& triplet, const TypePoint& x, double s) {
  if (s == 0.0) return 1.0;
  const auto xi = static_cast<Eigen::Index>(x.index());
  const auto reach = reachable_states(triplet.K(), {xi});
  const Eigen::MatrixXd K = restrict(triplet.K(), reach);
  if (s * spectral_radius(K) >= 1.0) return kInfinity;
  const Eigen::Index d = K.rows();
  const Eigen::VectorXd y =
      (Eigen::MatrixXd::Identity(d, d) - s * K).partialPivLu().solve(Eigen::VectorXd::Ones(d));
  const auto pos = std::find(reach.begin(), reach.end(), xi) - reach.begin();
  return y(pos);
}

double k_resolvent_mass(const ExpFamilyTriplet& triplet, const TypePoint& x, double s) {
  return 1.0 + exp_resolvent_excess(triplet.lambda(), x.value(), s);
}

Eigen::RowVectorXd gamma_resolvent(const FiniteTriplet& triplet, double s) {
  const auto reach = reachable_states(triplet.K(), gamma_support(triplet.gamma()));
  const Eigen::MatrixXd K = restrict(triplet.K(), reach);
  if (s * spectral_radius(K) >= 1.0) {
    throw SeriesError("gamma_resolvent: s outside the radius of convergence", kInfinity,
                      kInfinity);
  }
  const Eigen::Index d = K.rows();
  Eigen::VectorXd g(d);
  for (Eigen::Index i = 0; i < d; ++i) g(i) = triplet.gamma()(reach[i]);
  const Eigen::VectorXd sub =
      (Eigen::MatrixXd::Identity(d, d) - s * K).transpose().partialPivLu().solve(g);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(triplet.dim());
  for (Eigen::Index i = 0; i < d; ++i) out(reach[i]) = sub(i);
  return out;
}

double gamma_resolvent_apply(const ExpFamilyTriplet& triplet, const TestFunction& g, double s) {
  const auto w = exp_resolvent_weights(triplet.lambda(), triplet.mu(), s);
  double total = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    total += w[n] * exp_gamma_kn_expect(triplet, g, static_cast<int>(n));
  }
  return total;
}

// Eigenpair ---------------------------------------------------------------------------

Eigenpair eigen_build(const FiniteTriplet& triplet, const SpectralSummary& summary) {
  if (summary.recurrence == Recurrence::transient) {
    throw std::domain_error("eigen_build: kernel is R-transient");
  }
  const double m = triplet.m();
  const double R = summary.R;
  Eigen::VectorXd u(triplet.dim());
  for (Eigen::Index x = 0; x < triplet.dim(); ++x) {
    const double k = k_resolvent_mass(triplet, TypePoint::finite(x), R);
    u(x) = std::isfinite(k) ? (1.0 + m) * (k - 1.0) : kInfinity;  // outside E_R
  }
  const Eigen::VectorXd nu = (m / (1.0 + m)) * gamma_resolvent(triplet, R).transpose();

  Eigenpair e;
  e.rho = summary.rho;
  e.beta = summary.beta;
  e.u_vector = u;
  e.nu_vector = nu;
  e.u = [u](const TypePoint& x) { return u(static_cast<Eigen::Index>(x.index())); };
  e.nu_integrate = [nu](const TestFunction& g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < nu.size(); ++i) {
      if (nu(i) != 0.0) s += nu(i) * g(TypePoint::finite(i));
    }
    return s;
  };
  const Eigen::VectorXd probs = nu / nu.sum();
  e.nu_sample = [probs](Rng& rng) {
    return TypePoint::finite(static_cast<std::size_t>(sample_index(probs, rng)));
  };
  return e;
}

Eigenpair eigen_build(const ExpFamilyTriplet& triplet, const SpectralSummary& summary) {
  if (summary.recurrence == Recurrence::transient) {
    throw std::domain_error("eigen_build: kernel is R-transient");
  }
  const double m = triplet.m();
  const double R = summary.R;
  const double lambda = triplet.lambda();

  std::vector<double> w = exp_resolvent_weights(lambda, triplet.mu(), R);
  for (double& v : w) v *= m / (1.0 + m);
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) cdf[n] = (acc += w[n]);
  for (double& c : cdf) c /= acc;

  Eigenpair e;
  e.rho = summary.rho;
  e.beta = summary.beta;
  e.u = [m, lambda, R](const TypePoint& x) {
    return (1.0 + m) * exp_resolvent_excess(lambda, x.value(), R);
  };
  e.nu_integrate = [triplet, w](const TestFunction& g) {
    double total = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      total += w[n] * exp_gamma_kn_expect(triplet, g, static_cast<int>(n));
    }
    return total;
  };
  e.nu_sample = [triplet, cdf](Rng& rng) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const int n = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                            static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    return TypePoint::real(exp_family_gamma_kn_sample(triplet, n, rng));
  };
  return e;
}

Eigenpair eigen_build(const Triplet& triplet, const SpectralSummary& summary) {
  return std::visit([&](const auto& t) { return eigen_build(t, summary); }, triplet);
}

PfLimitReport pf_limit_check(const Triplet& triplet, const SpectralSummary& summary,
                             const TypePoint& x, int n_max) {
  if (summary.recurrence != Recurrence::positive) {
    throw std::domain_error("pf_limit_check: requires an R-positive kernel");
  }
  const Eigenpair e = eigen_build(triplet, summary);
  PfLimitReport rep;
  rep.limit = e.u(x) / summary.beta;
  const double R = summary.R;
  if (const auto* f = std::get_if<FiniteTriplet>(&triplet)) {
    const Eigen::MatrixXd M = f->mean_matrix();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(f->dim());
    for (int n = 0; n <= n_max; ++n) {
      if (n > 0) v = R * (M * v);
      const double val = v(static_cast<Eigen::Index>(x.index()));
      rep.rows.push_back({n, val, std::abs(val - rep.limit) / rep.limit});
    }
  } else {
    const auto& t = std::get<ExpFamilyTriplet>(triplet);
    for (int n = 0; n <= n_max; ++n) {
      const double val = std::pow(R, n) * kernel_power_mass(t, x, n);
      rep.rows.push_back({n, val, std::abs(val - rep.limit) / rep.limit});
    }
  }
  return rep;
}

}  // namespace lfbp
