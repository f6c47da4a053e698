#include "lfbp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace lfbp {

namespace {

void require_size(std::size_t n, const char* who) {
  if (n < kMinSampleSize) {
    throw InsufficientSample(std::string(who) + ": sample of " + std::to_string(n) +
                             " is below the minimum of " + std::to_string(kMinSampleSize));
  }
}

double ks_p_value(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
}

}  // namespace

MeanSe mc_mean_se(std::span<const double> sample) {
  if (sample.size() < 2) throw InsufficientSample("mc_mean_se: need at least two values");
  const double n = static_cast<double>(sample.size());
  // Shifted by the first value, so a constant sample has exactly zero spread.
  const double shift = sample.front();
  double sum = 0.0;
  for (double v : sample) sum += v - shift;
  const double offset = sum / n;
  double ss = 0.0;
  for (double v : sample) ss += (v - shift - offset) * (v - shift - offset);
  return {shift + offset, std::sqrt(ss / (n - 1.0) / n), sample.size()};
}

double kolmogorov_survival(double z) {
  if (z <= 0.0) return 1.0;
  if (z < 1.18) {
    // Theta-function form, fast for small z.
    const double y = std::exp(-1.23370055013616983 / (z * z));
    const double cdf = 2.25675833419102515 * std::sqrt(-std::log(y)) *
                       (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  const double x = std::exp(-2.0 * z * z);
  return std::clamp(2.0 * (x - std::pow(x, 4) + std::pow(x, 9)), 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require_size(a.size(), "ks_two_sample");
  require_size(b.size(), "ks_two_sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n1 - j / n2));
  }
  return {d, ks_p_value(d, n1 * n2 / (n1 + n2)), x.size(), y.size()};
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  require_size(sample.size(), "ks_one_sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p_value(d, n), x.size(), 0};
}

ChiSquareResult chi_square_geometric(std::span<const std::uint64_t> sample, double m) {
  require_size(sample.size(), "chi_square_geometric");
  if (!(m >= 0.0)) throw std::invalid_argument("chi_square_geometric: m must be non-negative");
  ChiSquareResult out;
  out.n = sample.size();
  const double n = static_cast<double>(sample.size());
  std::uint64_t max_k = 0;
  for (auto k : sample) {
    if (k == 0) throw std::invalid_argument("chi_square_geometric: counts must be positive");
    max_k = std::max(max_k, k);
  }

  // P(N = k) = (1 - q) q^{k-1}, q = m / (1 + m); P(N >= k) = q^{k-1}.
  const double q = m / (1.0 + m);
  std::vector<ChiSquareCell> cells;
  ChiSquareCell open{1, 0, 0.0, 0.0};
  for (std::uint64_t k = 1;; ++k) {
    const double tail_from_next = n * std::pow(q, static_cast<double>(k));
    open.expected += n * (1.0 - q) * std::pow(q, static_cast<double>(k - 1));
    open.hi = k;
    if (open.expected >= 5.0 && tail_from_next >= 5.0) {
      cells.push_back(open);
      open = {k + 1, 0, 0.0, 0.0};
      continue;
    }
    if (tail_from_next < 5.0) {
      // Everything from open.lo on forms the tail cell.
      open.hi = 0;
      open.expected += tail_from_next;
      break;
    }
  }
  if (open.expected < 5.0 && !cells.empty()) {
    open.lo = cells.back().lo;
    open.expected += cells.back().expected;
    cells.pop_back();
  }
  cells.push_back(open);

  for (auto k : sample) {
    for (auto& c : cells) {
      if (k >= c.lo && (c.hi == 0 || k <= c.hi)) {
        c.observed += 1.0;
        break;
      }
    }
  }
  for (const auto& c : cells) out.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected;
  out.dof = static_cast<int>(cells.size()) - 1;
  out.cells = std::move(cells);
  out.p_value = out.dof > 0 ? boost::math::gamma_q(out.dof / 2.0, out.statistic / 2.0)
                            : (out.statistic == 0.0 ? 1.0 : 0.0);
  return out;
}

RenewalSequences renewal_sequence(const std::vector<double>& a, const std::vector<double>& b,
                                  int n_max) {
  if (n_max < 0) throw std::invalid_argument("renewal_sequence: n_max must be non-negative");
  RenewalSequences r;
  r.a.assign(1, 0.0);
  r.a.insert(r.a.end(), a.begin(), a.end());
  r.b = b;
  double a1 = 0.0, a_prime = 0.0, b1 = 0.0;
  long g = 0;
  for (std::size_t k = 1; k < r.a.size(); ++k) {
    if (!(r.a[k] >= 0.0)) throw std::invalid_argument("renewal_sequence: a_" + std::to_string(k) + " is negative");
    a1 += r.a[k];
    a_prime += static_cast<double>(k) * r.a[k];
    if (r.a[k] > 0.0) g = std::gcd(g, static_cast<long>(k));
  }
  for (std::size_t k = 0; k < r.b.size(); ++k) {
    if (!(r.b[k] >= 0.0)) throw std::invalid_argument("renewal_sequence: b_" + std::to_string(k) + " is negative");
    b1 += r.b[k];
  }
  if (std::abs(a1 - 1.0) > 1e-12) {
    throw std::invalid_argument("renewal_sequence: a(1) = " + std::to_string(a1) + ", expected 1");
  }
  if (!(b1 > 0.0)) throw std::invalid_argument("renewal_sequence: b(1) must be positive");

  r.period = g;
  r.aperiodic = g == 1;
  r.limit = b1 / a_prime;
  r.c.assign(n_max + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    double c = n < static_cast<int>(r.b.size()) ? r.b[n] : 0.0;
    const int kmax = std::min<int>(n, static_cast<int>(r.a.size()) - 1);
    for (int k = 1; k <= kmax; ++k) c += r.a[k] * r.c[n - k];
    r.c[n] = c;
  }
  r.tail_deviation = std::abs(r.c.back() - r.limit);
  return r;
}

}  // namespace lfbp
