#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lfbp/typespace.hpp"

namespace lfbp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A power series could not be summed to the requested accuracy.
class SeriesError : public std::runtime_error {
 public:
  SeriesError(const std::string& what, double partial_sum, double bound)
      : std::runtime_error(what), partial_sum_(partial_sum), bound_(bound) {}
  double partial_sum() const { return partial_sum_; }
  double bound() const { return bound_; }

 private:
  double partial_sum_;
  double bound_;
};

class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Law of the life length L of an individual of the embedded CMJ process:
/// the tail d_n = P(L > n) = int K^n(x, E) gamma(dx).
///
/// The tail is tabulated up to the truncation index N_max; the remaining
/// mass d_{N_max} is reported as the certified tail bound.
class LifeLengthLaw {
 public:
  struct Finite {
    Eigen::MatrixXd K;      // restricted to states reachable from supp(gamma)
    Eigen::VectorXd gamma;  // on the same states
    double radius;          // spectral radius of K
  };
  struct Exp {
    double lambda;
    double mu;
  };
  /// A tail given directly; boundary values f(R*) and f'(R*) supplied by the caller.
  struct Sequence {
    std::function<double(int)> tail;
    double R_star;
    double f_at_R_star;
    double fprime_at_R_star;
  };

  static LifeLengthLaw finite(const FiniteTriplet& triplet);
  static LifeLengthLaw exp_family(double lambda, double mu);
  static LifeLengthLaw sequence(std::function<double(int)> tail, double R_star,
                                double f_at_R_star, double fprime_at_R_star);

  /// d_n; d_0 = 1.
  double tail(int n) const;
  /// Radius of convergence R* of f.
  double R_star() const { return R_star_; }
  /// lim_{s -> R*} f(s).
  double f_at_R_star() const;
  int truncation() const { return static_cast<int>(table_.size()) - 1; }
  /// Mass of {L > N_max} that the sampler assigns to L = N_max + 1.
  double tail_bound() const { return table_.back(); }
  const std::vector<double>& tail_table() const { return table_; }

  const std::variant<Finite, Exp, Sequence>& backend() const { return backend_; }

 private:
  explicit LifeLengthLaw(std::variant<Finite, Exp, Sequence> backend);
  std::variant<Finite, Exp, Sequence> backend_;
  double R_star_;
  std::vector<double> table_;
};

LifeLengthLaw life_length_law(const FiniteTriplet& triplet);
LifeLengthLaw life_length_law(const ExpFamilyTriplet& triplet);
LifeLengthLaw life_length_law(const Triplet& triplet);

/// f(s) = sum_{n >= 1} d_n s^n; +inf beyond the radius of convergence.
double f_eval(const LifeLengthLaw& law, double s);
/// f'(s) = sum_{n >= 1} n d_n s^{n-1}.
double f_derivative(const LifeLengthLaw& law, double s);

/// Phi(s) = 2F2(1, mu; lambda, mu + 1; s), so that f(s) = Phi(lambda s) - 1
/// for the (lambda, mu, m) family.
double hypergeom_phi(double lambda, double mu, double s);

enum class Criticality { subcritical, critical, supercritical };
enum class Recurrence { positive, null, transient };

std::string to_string(Criticality c);
std::string to_string(Recurrence r);

struct SpectralSummary {
  double m = 0.0;
  double R = 0.0;
  double R_star = 0.0;
  double rho = 0.0;
  std::optional<double> alpha;  // Malthusian parameter, when m f(R) = 1 has a root
  double beta = 0.0;            // m R f'(R), possibly +inf
  double m_f1 = 0.0;            // m f(1)
  double mean_life = 0.0;       // E L = 1 + f(1)
  Criticality criticality = Criticality::critical;
  Recurrence recurrence = Recurrence::positive;
  int bisections = 0;
};

inline constexpr double kRootTolerance = 1e-12;
inline constexpr int kMaxBisections = 200;
inline constexpr double kCriticalTolerance = 1e-10;

/// Convergence parameter R from m f(R) = 1 (bisection), or R = R* when
/// f(R*) < 1/m. Fills R, R_star, rho, alpha, beta and the recurrence class.
SpectralSummary solve_R(const LifeLengthLaw& law, double m);

/// Trichotomy by the sign of m f(1) - 1.
Criticality classify(const LifeLengthLaw& law, double m);

/// solve_R plus classify plus E L.
SpectralSummary analyze(const LifeLengthLaw& law, double m);
SpectralSummary analyze(const Triplet& triplet);

/// K^{(s)}(x, E) = sum_n s^n K^n(x, E); +inf when x is outside E_s.
double k_resolvent_mass(const FiniteTriplet& triplet, const TypePoint& x, double s);
double k_resolvent_mass(const ExpFamilyTriplet& triplet, const TypePoint& x, double s);

/// Row vector gamma^T K^{(s)} for s inside the radius of convergence of f.
Eigen::RowVectorXd gamma_resolvent(const FiniteTriplet& triplet, double s);
/// int int g(z) K^{(s)}(y, dz) gamma(dy), series truncated at the certified index.
double gamma_resolvent_apply(const ExpFamilyTriplet& triplet, const TestFunction& g, double s);

/// Right eigenfunction u and left eigenmeasure nu of M at rho = 1/R.
struct Eigenpair {
  double rho = 0.0;
  double beta = 0.0;
  std::function<double(const TypePoint&)> u;
  std::function<double(const TestFunction&)> nu_integrate;
  std::function<TypePoint(Rng&)> nu_sample;
  /// Finite family only.
  std::optional<Eigen::VectorXd> u_vector;
  std::optional<Eigen::VectorXd> nu_vector;
};

Eigenpair eigen_build(const FiniteTriplet& triplet, const SpectralSummary& summary);
Eigenpair eigen_build(const ExpFamilyTriplet& triplet, const SpectralSummary& summary);
Eigenpair eigen_build(const Triplet& triplet, const SpectralSummary& summary);

struct PfLimitRow {
  int n;
  double scaled_mass;  // R^n M^n(x, E)
  double rel_error;
};

struct PfLimitReport {
  double limit = 0.0;  // u(x) nu(E) / beta
  std::vector<PfLimitRow> rows;
};

/// Tabulates R^n M^n(x, E) for n = 0..n_max against u(x) / beta.
PfLimitReport pf_limit_check(const Triplet& triplet, const SpectralSummary& summary,
                             const TypePoint& x, int n_max);

}  // namespace lfbp
