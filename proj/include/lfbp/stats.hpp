#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace lfbp {

class InsufficientSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMinSampleSize = 100;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error s / sqrt(n).
MeanSe mc_mean_se(std::span<const double> sample);

/// P(K > z) for the Kolmogorov distribution.
double kolmogorov_survival(double z);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Two-sample Kolmogorov-Smirnov test, asymptotic p-value with the usual
/// small-sample correction of the argument. Both samples need >= 100 points.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample test against a continuous CDF.
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

struct ChiSquareCell {
  std::uint64_t lo = 1;
  std::uint64_t hi = 0;  // inclusive; 0 means open-ended
  double observed = 0.0;
  double expected = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::vector<ChiSquareCell> cells;
};

/// Goodness of fit of positive counts to P(N = k) = m^{k-1} / (1 + m)^k.
/// Cells are pooled from k = 1 upward until each expects at least 5; the
/// last cell is the open tail.
ChiSquareResult chi_square_geometric(std::span<const std::uint64_t> sample, double m);

/// Coefficients of b(s) / (1 - a(s)), i.e. c_n = b_n + sum_{k=1}^n a_k c_{n-k}.
struct RenewalSequences {
  std::vector<double> a;  // a_0 = 0, a_1, a_2, ...
  std::vector<double> b;  // b_0, b_1, ...
  std::vector<double> c;  // c_0..c_{n_max}
  double limit = 0.0;     // b(1) / a'(1)
  long period = 1;        // gcd of the support of a
  bool aperiodic = true;
  double tail_deviation = 0.0;  // |c_{n_max} - limit|
};

/// `a` lists a_1, a_2, ... (a_0 is zero); `b` lists b_0, b_1, ....
RenewalSequences renewal_sequence(const std::vector<double>& a, const std::vector<double>& b,
                                  int n_max);

}  // namespace lfbp
