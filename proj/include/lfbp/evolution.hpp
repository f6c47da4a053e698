#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "lfbp/typespace.hpp"

namespace lfbp {

/// The n-th generation triplet {K_n, gamma_n, m_n}: conditionally on x,
/// Z_n is linear-fractional with these parameters.
///
///   m_n       = m sum_{k<n} int M^k(y, E) gamma(dy)
///   gamma_n   = (m / m_n) sum_{k<n} int M^k(y, .) gamma(dy)
///   K_n(x, .) = M^n(x, .) - m_n / (1 + m_n) M^n(x, E) gamma_n
///
/// gamma_n is kept as a mixture over k with weights w_k proportional to
/// m int M^k(y, E) gamma(dy).
class GenerationLaw {
 public:
  virtual ~GenerationLaw() = default;

  int n() const { return n_; }
  double m_n() const { return m_n_; }
  /// Mixture weights w_k, k = 0..n-1; they sum to one.
  const std::vector<double>& weights() const { return weights_; }

  /// M^n(x, E).
  virtual double mean_mass(const TypePoint& x) const = 0;
  /// int g dK_n(x, .).
  virtual double kn_apply(const TypePoint& x, const TestFunction& g) const = 0;
  virtual double gamma_n_integrate(const TestFunction& g) const = 0;
  virtual TypePoint sample_gamma_n(Rng& rng) const = 0;
  /// Draw from K_n(x, .) / K_n(x, E).
  virtual TypePoint sample_marked(const TypePoint& x, Rng& rng) const = 0;

  /// K_n(x, E) = M^n(x, E) / (1 + m_n) = P_x(Z_n > 0).
  double survival(const TypePoint& x) const { return mean_mass(x) / (1.0 + m_n_); }

 protected:
  GenerationLaw(int n, double m_n, std::vector<double> weights)
      : n_(n), m_n_(m_n), weights_(std::move(weights)) {}
  void set_totals(double m_n, std::vector<double> weights) {
    m_n_ = m_n;
    weights_ = std::move(weights);
  }

 private:
  int n_;
  double m_n_;
  std::vector<double> weights_;
};

class FiniteGenerationLaw final : public GenerationLaw {
 public:
  FiniteGenerationLaw(int n, double m_n, std::vector<double> weights, Eigen::MatrixXd Mn,
                      Eigen::VectorXd gamma_n, Eigen::MatrixXd Kn);

  const Eigen::MatrixXd& Mn() const { return Mn_; }
  const Eigen::VectorXd& gamma_n() const { return gamma_n_; }
  const Eigen::MatrixXd& Kn() const { return Kn_; }

  double mean_mass(const TypePoint& x) const override;
  double kn_apply(const TypePoint& x, const TestFunction& g) const override;
  double gamma_n_integrate(const TestFunction& g) const override;
  TypePoint sample_gamma_n(Rng& rng) const override;
  TypePoint sample_marked(const TypePoint& x, Rng& rng) const override;

 private:
  Eigen::MatrixXd Mn_;
  Eigen::VectorXd gamma_n_;
  Eigen::MatrixXd Kn_;
};

/// (lambda, mu, m) family. Every measure involved is a non-negative
/// combination of Q_j, the normalized law of int K^j(y, .) gamma(dy)
/// (a sum of independent exponentials with rates mu + j, lambda, ...,
/// lambda + j - 1), plus the law of x + S_n for K^n(x, .).
class ExpGenerationLaw final : public GenerationLaw {
 public:
  ExpGenerationLaw(ExpFamilyTriplet triplet, int n);

  double mean_mass(const TypePoint& x) const override;
  double kn_apply(const TypePoint& x, const TestFunction& g) const override;
  double gamma_n_integrate(const TestFunction& g) const override;
  TypePoint sample_gamma_n(Rng& rng) const override;
  /// Exact in law: the first level-n particle in marked-first depth-first
  /// order of a tree grown from x, conditioned on reaching level n.
  TypePoint sample_marked(const TypePoint& x, Rng& rng) const override;

  /// Mixture weights of gamma_n over Q_0..Q_{n-1}.
  const std::vector<double>& gamma_n_components() const { return component_weights_; }

 private:
  ExpFamilyTriplet triplet_;
  std::vector<double> tail_;                  // d_0..d_n
  std::vector<double> G_;                     // int M^k(y, E) gamma(dy), k = 0..n
  std::vector<std::vector<double>> coeff_;    // G_k = sum_j coeff_[k][j] d_j Q_j
  std::vector<double> component_weights_;
  std::vector<double> component_cdf_;
};

FiniteGenerationLaw evolve(const FiniteTriplet& triplet, int n);
ExpGenerationLaw evolve(const ExpFamilyTriplet& triplet, int n);
std::unique_ptr<GenerationLaw> evolve(const Triplet& triplet, int n);

/// P_x(Z_n > 0) = M^n(x, E) / (1 + m_n).
double survival_prob(const FiniteTriplet& triplet, const TypePoint& x, int n);
double survival_prob(const ExpFamilyTriplet& triplet, const TypePoint& x, int n);
double survival_prob(const Triplet& triplet, const TypePoint& x, int n);

struct GenerationTotals {
  int n = 0;
  double m_n = 0.0;
  double mean_mass = 1.0;  // M^n(x, E)
  double survival() const { return mean_mass / (1.0 + m_n); }
};

/// m_n and M^n(x, E) for n = 0..n_max in one pass: O(n_max d^2) for the finite
/// family and O(n_max^2) for the (lambda, mu, m) family.
std::vector<GenerationTotals> generation_totals(const Triplet& triplet, const TypePoint& x,
                                                int n_max);

/// E_x exp(int ln h dZ_n) = 1 - K_n(x, E) + K_n(x, h) / (1 + m_n - m_n gamma_n(h)).
double gen_functional(const GenerationLaw& law, const TypePoint& x, const TestFunction& h);
double gen_functional(const FiniteGenerationLaw& law, Eigen::Index x, const Eigen::VectorXd& h);

/// Same quantity by composing the one-step functional n times (finite family).
double gen_functional_iterated(const FiniteTriplet& triplet, Eigen::Index x, int n,
                               const Eigen::VectorXd& h);

/// Z_n given Z_n > 0 drawn from the evolved triplet: one point from
/// K_n(x, .) / K_n(x, E), then shifted-geometric(m_n) - 1 points from gamma_n.
GenerationSnapshot conditional_sample(const GenerationLaw& law, const TypePoint& x, Rng& rng);

}  // namespace lfbp
