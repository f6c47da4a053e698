#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfbp/probe.hpp"
#include "lfbp/spectral.hpp"
#include "lfbp/typespace.hpp"

namespace lfbp {

class RegimeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when R is not finite-positive, f'(R) is infinite or x lies outside E_R.
class ConditionViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr std::size_t kMinConditionedSamples = 500;

/// One verdict. Exact checks read a grid of n values and declare convergence
/// when the last three agree within `tolerance` (relative); Monte Carlo
/// checks carry the sample size and standard error.
struct LimitCheck {
  std::string name;
  std::string method;  // "exact" or "monte_carlo"
  std::string target_kind;  // "derived" or "printed"
  double target = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  std::size_t sample_size = 0;
  std::vector<std::pair<int, double>> grid;
  bool converged = false;
  std::optional<double> se;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::string verdict;  // pass, fail, not converged, insufficient power

  bool passed() const { return verdict == "pass"; }
};

struct LimitReport {
  Criticality regime = Criticality::critical;
  SpectralSummary summary;
  TypePoint x = TypePoint::finite(0);
  double u_x = 0.0;
  std::string probe;
  std::map<std::string, double> printed;
  std::map<std::string, double> derived;
  std::map<std::string, double> measured;
  std::vector<LimitCheck> tests;
  std::vector<std::string> notes;

  const LimitCheck* find(const std::string& name) const;
};

nlohmann::json to_json(const LimitReport& report);

struct LimitOptions {
  /// Regime default when empty: 10, 20, ..., 60 (sub/supercritical) or
  /// 100 .. 10^4 (critical).
  std::vector<int> n_grid;
  double tolerance = 1e-3;
  /// Monte Carlo part skipped when zero.
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Generation for the Monte Carlo part; 0 uses the largest grid point.
  int mc_generation = 0;
  /// Significance level for the KS verdicts.
  double alpha = 0.01;
};

/// Scaled survival, m_n -> m~ and the conditional functional at probe h
/// against the limiting linear-fractional law (kappa~, gamma~, m~).
LimitReport limit_subcritical(const Triplet& triplet, const TypePoint& x, const Probe& h,
                              const LimitOptions& opt = {});

/// n P(Z_n > 0), m_n / n, and the conditioned law of int w dZ_n / (n int w dnu).
LimitReport limit_critical(const Triplet& triplet, const TypePoint& x, const Probe& w,
                           const LimitOptions& opt = {});

/// P(Z_n > 0), rho^{-n} m_n, and the conditioned tail of int w dZ_n / (rho^n int w dnu).
LimitReport limit_supercritical(const Triplet& triplet, const TypePoint& x, const Probe& w,
                                const LimitOptions& opt = {});

/// Dispatch on the classification.
LimitReport limit_report(const Triplet& triplet, const TypePoint& x, const Probe& w,
                         const LimitOptions& opt = {});

/// Conditioned values int w dZ_n / scale over replicates that survive to n,
/// from the direct simulator started at x.
std::vector<double> conditioned_sample(const Triplet& triplet, const TypePoint& x, int n,
                                       const Probe& w, double scale, std::size_t replicates,
                                       std::uint64_t seed, unsigned workers,
                                       std::size_t* truncated = nullptr);

}  // namespace lfbp
