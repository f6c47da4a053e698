#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lfbp/rng.hpp"

namespace lfbp {

class InvalidTriplet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A particle type: an index into a finite type set, or a point of (0, inf).
class TypePoint {
 public:
  static TypePoint finite(std::size_t index) { return TypePoint(index, 0.0, true); }
  static TypePoint real(double value) { return TypePoint(0, value, false); }

  bool is_finite() const { return finite_; }
  std::size_t index() const { return index_; }
  double value() const { return value_; }
  /// Index for finite types, the coordinate otherwise.
  double coordinate() const { return finite_ ? static_cast<double>(index_) : value_; }

  friend bool operator==(const TypePoint&, const TypePoint&) = default;

 private:
  TypePoint(std::size_t i, double v, bool f) : index_(i), value_(v), finite_(f) {}
  std::size_t index_;
  double value_;
  bool finite_;
};

/// Bounded measurable test function on the type space.
using TestFunction = std::function<double(const TypePoint&)>;

inline TestFunction constant_function(double c) {
  return [c](const TypePoint&) { return c; };
}

/// K(x, dy) with total mass K(x, E) <= 1.
class SubStochasticKernel {
 public:
  virtual ~SubStochasticKernel() = default;
  virtual double mass(const TypePoint& x) const = 0;
  /// Draw from kappa_x = K(x, .) / K(x, E); requires mass(x) > 0.
  virtual TypePoint sample_marked(const TypePoint& x, Rng& rng) const = 0;
  /// Integral of g against K(x, dy).
  virtual double apply(const TestFunction& g, const TypePoint& x) const = 0;
};

class ImmigrationMeasure {
 public:
  virtual ~ImmigrationMeasure() = default;
  virtual TypePoint sample(Rng& rng) const = 0;
  virtual double integrate(const TestFunction& g) const = 0;
};

/// One generation of an LF-process: a finite random multiset of types.
struct GenerationSnapshot {
  int generation = 0;
  std::vector<TypePoint> points;
  std::size_t size() const { return points.size(); }
};

/// The defining triplet {K, gamma, m} through the abstract interfaces.
class LFTriplet {
 public:
  LFTriplet(std::shared_ptr<const SubStochasticKernel> kernel,
            std::shared_ptr<const ImmigrationMeasure> immigration, double m);
  virtual ~LFTriplet() = default;

  const SubStochasticKernel& kernel() const { return *kernel_; }
  const ImmigrationMeasure& immigration() const { return *immigration_; }
  double m() const { return m_; }

 private:
  std::shared_ptr<const SubStochasticKernel> kernel_;
  std::shared_ptr<const ImmigrationMeasure> immigration_;
  double m_;
};

/// Finite type set {0, ..., d-1}; exact matrix engines apply.
class FiniteTriplet : public LFTriplet {
 public:
  FiniteTriplet(Eigen::MatrixXd K, Eigen::VectorXd gamma, double m);

  Eigen::Index dim() const { return K_.rows(); }
  const Eigen::MatrixXd& K() const { return K_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  /// Row masses K(x, E).
  Eigen::VectorXd mass() const { return K_.rowwise().sum(); }
  /// M = K + m (K 1) gamma^T.
  Eigen::MatrixXd mean_matrix() const;

 private:
  Eigen::MatrixXd K_;
  Eigen::VectorXd gamma_;
};

/// The (lambda, mu, m) family on E = (0, inf):
/// K(x, A) = e^{-x} P(x + Y_lambda in A), gamma = Exp(mu).
class ExpFamilyTriplet : public LFTriplet {
 public:
  ExpFamilyTriplet(double lambda, double mu, double m);
  double lambda() const { return lambda_; }
  double mu() const { return mu_; }

 private:
  double lambda_;
  double mu_;
};

using Triplet = std::variant<FiniteTriplet, ExpFamilyTriplet>;

inline const LFTriplet& as_lf(const Triplet& t) {
  return std::visit([](const auto& v) -> const LFTriplet& { return v; }, t);
}

// Mean kernel ----------------------------------------------------------------

/// (Mg)(x) = int g(y) K(x, dy) + m K(x, E) int g d gamma.
double mean_apply(const LFTriplet& triplet, const TestFunction& g, const TypePoint& x);

/// M^n(x, E) through n nested applications of mean_apply. Cost grows
/// geometrically with n for continuous kernels; use the family overloads.
double kernel_power_mass_nested(const LFTriplet& triplet, const TypePoint& x, int n);

double kernel_power_mass(const FiniteTriplet& triplet, const TypePoint& x, int n);
double kernel_power_mass(const ExpFamilyTriplet& triplet, const TypePoint& x, int n);

/// M^n g for every starting type at once.
Eigen::VectorXd kernel_power_apply(const FiniteTriplet& triplet, const Eigen::VectorXd& g, int n);

// Closed forms of the exponential family ---------------------------------------

/// K^n(x, E) = lambda^n e^{-nx} Gamma(lambda) / Gamma(lambda + n), in log space.
double exp_family_kn_mass(double lambda, double x, int n);
double exp_family_log_kn_mass(double lambda, double x, int n);

/// d_n = Gamma(lambda) lambda^n mu / (Gamma(lambda + n) (mu + n)).
double exp_family_tail(double lambda, double mu, int n);

/// int g(y) K^n(x, dy) = K^n(x, E) E[g(x + S_n)], S_n a rate-ladder sum.
double exp_family_kn_apply(const ExpFamilyTriplet& t, const TestFunction& g, double x, int n);

/// int int g(z) K^n(y, dz) gamma(dy) = d_n E[g(V_n + S_n)], V_n ~ Exp(mu + n).
double exp_family_gamma_kn_apply(const ExpFamilyTriplet& t, const TestFunction& g, int n);

/// Draw from the normalized measure int K^n(y, .) gamma(dy).
double exp_family_gamma_kn_sample(const ExpFamilyTriplet& t, int n, Rng& rng);

// Sampling ------------------------------------------------------------------------

/// One offspring generation of a particle of type x under the
/// linear-fractional law: empty with probability 1 - K(x, E); otherwise a
/// shifted-geometric number of children, the first drawn from kappa_x and
/// the rest i.i.d. from gamma.
GenerationSnapshot offspring_sample(const LFTriplet& triplet, const TypePoint& x, Rng& rng);

/// Appends the offspring of x to `out`; returns the number appended.
std::size_t append_offspring(const LFTriplet& triplet, const TypePoint& x, Rng& rng,
                             std::vector<TypePoint>& out);

/// Index drawn from a probability vector by inversion.
Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

}  // namespace lfbp
