#include "lfbp/typespace.hpp"

#include <cmath>
#include <sstream>

#include "lfbp/quadrature.hpp"

namespace lfbp {
namespace {

class FiniteKernel final : public SubStochasticKernel {
 public:
  explicit FiniteKernel(const Eigen::MatrixXd& K) : K_(K), mass_(K.rowwise().sum()) {}

  double mass(const TypePoint& x) const override { return mass_(check(x)); }

  TypePoint sample_marked(const TypePoint& x, Rng& rng) const override {
    const auto i = check(x);
    const Eigen::VectorXd row = K_.row(i).transpose() / mass_(i);
    return TypePoint::finite(static_cast<std::size_t>(sample_index(row, rng)));
  }

  double apply(const TestFunction& g, const TypePoint& x) const override {
    const auto i = check(x);
    double s = 0.0;
    for (Eigen::Index j = 0; j < K_.cols(); ++j) {
      if (K_(i, j) != 0.0) s += K_(i, j) * g(TypePoint::finite(j));
    }
    return s;
  }

 private:
  Eigen::Index check(const TypePoint& x) const {
    if (!x.is_finite() || static_cast<Eigen::Index>(x.index()) >= K_.rows()) {
      throw std::out_of_range("type point outside the finite type set");
    }
    return static_cast<Eigen::Index>(x.index());
  }
  Eigen::MatrixXd K_;
  Eigen::VectorXd mass_;
};

class FiniteMeasure final : public ImmigrationMeasure {
 public:
  explicit FiniteMeasure(const Eigen::VectorXd& p) : p_(p) {}
  TypePoint sample(Rng& rng) const override {
    return TypePoint::finite(static_cast<std::size_t>(sample_index(p_, rng)));
  }
  double integrate(const TestFunction& g) const override {
    double s = 0.0;
    for (Eigen::Index j = 0; j < p_.size(); ++j) {
      if (p_(j) != 0.0) s += p_(j) * g(TypePoint::finite(j));
    }
    return s;
  }

 private:
  Eigen::VectorXd p_;
};

double real_of(const TypePoint& x) {
  if (x.is_finite() || !(x.value() > 0.0)) {
    throw std::out_of_range("type point outside (0, inf)");
  }
  return x.value();
}

class ShiftedExpKernel final : public SubStochasticKernel {
 public:
  explicit ShiftedExpKernel(double lambda) : lambda_(lambda) {}
  double mass(const TypePoint& x) const override { return std::exp(-real_of(x)); }
  TypePoint sample_marked(const TypePoint& x, Rng& rng) const override {
    return TypePoint::real(real_of(x) + rng.exponential(lambda_));
  }
  double apply(const TestFunction& g, const TypePoint& x) const override {
    const double x0 = real_of(x);
    return std::exp(-x0) *
           expect_exponential([&](double y) { return g(TypePoint::real(x0 + y)); }, lambda_);
  }

 private:
  double lambda_;
};

class ExpMeasure final : public ImmigrationMeasure {
 public:
  explicit ExpMeasure(double mu) : mu_(mu) {}
  TypePoint sample(Rng& rng) const override { return TypePoint::real(rng.exponential(mu_)); }
  double integrate(const TestFunction& g) const override {
    // The lower endpoint is excluded from E; the rule never evaluates at 0.
    return expect_exponential([&](double y) { return g(TypePoint::real(y)); }, mu_);
  }

 private:
  double mu_;
};

void require_m(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw InvalidTriplet("m: must lie in (0, inf), got " + std::to_string(m));
  }
}

std::shared_ptr<const SubStochasticKernel> make_finite_kernel(const Eigen::MatrixXd& K,
                                                              const Eigen::VectorXd& gamma) {
  if (K.rows() == 0 || K.rows() != K.cols()) {
    throw InvalidTriplet("K: must be a non-empty square matrix");
  }
  if (gamma.size() != K.rows()) {
    throw InvalidTriplet("gamma: length " + std::to_string(gamma.size()) +
                         " does not match dimension " + std::to_string(K.rows()));
  }
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      if (!(K(i, j) >= 0.0) || !std::isfinite(K(i, j))) {
        std::ostringstream os;
        os << "K[" << i << "][" << j << "]: entries must be finite and non-negative";
        throw InvalidTriplet(os.str());
      }
      s += K(i, j);
    }
    if (s > 1.0 + 1e-12) {
      std::ostringstream os;
      os << "K[" << i << "]: row sum " << s << " exceeds 1";
      throw InvalidTriplet(os.str());
    }
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    if (!(gamma(j) >= 0.0)) {
      throw InvalidTriplet("gamma[" + std::to_string(j) + "]: must be non-negative");
    }
    total += gamma(j);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "gamma: entries sum to " << total << ", expected 1";
    throw InvalidTriplet(os.str());
  }
  return std::make_shared<FiniteKernel>(K);
}

std::shared_ptr<const SubStochasticKernel> make_exp_kernel(double lambda, double mu) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidTriplet("lambda: must be positive");
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidTriplet("mu: must be positive");
  return std::make_shared<ShiftedExpKernel>(lambda);
}

}  // namespace

LFTriplet::LFTriplet(std::shared_ptr<const SubStochasticKernel> kernel,
                     std::shared_ptr<const ImmigrationMeasure> immigration, double m)
    : kernel_(std::move(kernel)), immigration_(std::move(immigration)), m_(m) {
  require_m(m);
}

FiniteTriplet::FiniteTriplet(Eigen::MatrixXd K, Eigen::VectorXd gamma, double m)
    : LFTriplet(make_finite_kernel(K, gamma), std::make_shared<FiniteMeasure>(gamma), m),
      K_(std::move(K)),
      gamma_(std::move(gamma)) {}

Eigen::MatrixXd FiniteTriplet::mean_matrix() const {
  return K_ + m() * mass() * gamma_.transpose();
}

ExpFamilyTriplet::ExpFamilyTriplet(double lambda, double mu, double m)
    : LFTriplet(make_exp_kernel(lambda, mu), std::make_shared<ExpMeasure>(mu), m),
      lambda_(lambda),
      mu_(mu) {}

double mean_apply(const LFTriplet& triplet, const TestFunction& g, const TypePoint& x) {
  const double mass = triplet.kernel().mass(x);
  const double marked = triplet.kernel().apply(g, x);
  if (mass == 0.0) return marked;
  return marked + triplet.m() * mass * triplet.immigration().integrate(g);
}

double kernel_power_mass_nested(const LFTriplet& triplet, const TypePoint& x, int n) {
  if (n < 0) throw std::invalid_argument("kernel_power_mass: n must be non-negative");
  std::function<double(const TypePoint&, int)> power = [&](const TypePoint& y, int k) {
    if (k == 0) return 1.0;
    return mean_apply(triplet, [&](const TypePoint& z) { return power(z, k - 1); }, y);
  };
  return power(x, n);
}

Eigen::VectorXd kernel_power_apply(const FiniteTriplet& triplet, const Eigen::VectorXd& g,
                                   int n) {
  if (n < 0) throw std::invalid_argument("kernel_power_apply: n must be non-negative");
  const Eigen::MatrixXd M = triplet.mean_matrix();
  Eigen::VectorXd v = g;
  for (int k = 0; k < n; ++k) v = M * v;
  return v;
}

double kernel_power_mass(const FiniteTriplet& triplet, const TypePoint& x, int n) {
  const Eigen::VectorXd v =
      kernel_power_apply(triplet, Eigen::VectorXd::Ones(triplet.dim()), n);
  return v(static_cast<Eigen::Index>(x.index()));
}

double exp_family_log_kn_mass(double lambda, double x, int n) {
  if (n < 0) throw std::invalid_argument("exp_family_kn_mass: n must be non-negative");
  if (n == 0) return 0.0;
  return n * std::log(lambda) - n * x + std::lgamma(lambda) - std::lgamma(lambda + n);
}

double exp_family_kn_mass(double lambda, double x, int n) {
  return std::exp(exp_family_log_kn_mass(lambda, x, n));
}

double exp_family_tail(double lambda, double mu, int n) {
  if (n == 0) return 1.0;
  return std::exp(exp_family_log_kn_mass(lambda, 0.0, n) + std::log(mu) - std::log(mu + n));
}

// M^n(x, E) = K^n(x, E) + m sum_{i=1}^n K^i(x, E) G_{n-i}, where
// G_j = int M^j(y, E) gamma(dy) solves G_j = d_j + m sum_{i=1}^j d_i G_{j-i}.
double kernel_power_mass(const ExpFamilyTriplet& triplet, const TypePoint& x, int n) {
  if (n < 0) throw std::invalid_argument("kernel_power_mass: n must be non-negative");
  const double x0 = real_of(x);
  const double m = triplet.m();
  std::vector<double> d(n + 1), G(n + 1);
  for (int j = 0; j <= n; ++j) d[j] = exp_family_tail(triplet.lambda(), triplet.mu(), j);
  for (int j = 0; j <= n; ++j) {
    double s = d[j];
    for (int i = 1; i <= j; ++i) s += m * d[i] * G[j - i];
    G[j] = s;
  }
  double total = exp_family_kn_mass(triplet.lambda(), x0, n);
  for (int i = 1; i <= n; ++i) total += m * exp_family_kn_mass(triplet.lambda(), x0, i) * G[n - i];
  return total;
}

double exp_family_kn_apply(const ExpFamilyTriplet& t, const TestFunction& g, double x, int n) {
  const double mass = exp_family_kn_mass(t.lambda(), x, n);
  if (n == 0) return g(TypePoint::real(x));
  return mass *
         expect_rate_ladder([&](double s) { return g(TypePoint::real(x + s)); }, t.lambda(), n);
}

double exp_family_gamma_kn_apply(const ExpFamilyTriplet& t, const TestFunction& g, int n) {
  const double dn = exp_family_tail(t.lambda(), t.mu(), n);
  const double rate = t.mu() + n;
  const auto inner = [&](double s) {
    return expect_exponential([&](double v) { return g(TypePoint::real(v + s)); }, rate,
                              kInnerQuadrature);
  };
  return dn * expect_rate_ladder(inner, t.lambda(), n);
}

double exp_family_gamma_kn_sample(const ExpFamilyTriplet& t, int n, Rng& rng) {
  double y = rng.exponential(t.mu() + n);
  for (int j = 0; j < n; ++j) y += rng.exponential(t.lambda() + j);
  return y;
}

Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  Eigen::Index last = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t append_offspring(const LFTriplet& triplet, const TypePoint& x, Rng& rng,
                             std::vector<TypePoint>& out) {
  const double mass = triplet.kernel().mass(x);
  if (!(rng.uniform() < mass)) return 0;
  const auto count = rng.shifted_geometric(triplet.m());
  out.push_back(triplet.kernel().sample_marked(x, rng));
  for (std::uint64_t k = 1; k < count; ++k) out.push_back(triplet.immigration().sample(rng));
  return count;
}

GenerationSnapshot offspring_sample(const LFTriplet& triplet, const TypePoint& x, Rng& rng) {
  GenerationSnapshot snap;
  snap.generation = 1;
  append_offspring(triplet, x, rng, snap.points);
  return snap;
}

}  // namespace lfbp
