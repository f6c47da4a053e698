#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfbp {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridRange {
  double lo = 0.25;
  double hi = 4.0;
  int count = 50;
};

/// Parses "LO:HI:COUNT".
GridRange parse_range(const std::string& text);

/// Everything a command reads. Defaults are echoed into every report; the
/// worker count is not, because output must not depend on it.
struct RunConfig {
  std::string triplet;  // inline JSON or a path
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  int n = 10;
  std::optional<double> tol;
  std::string out;              // empty: standard output
  std::string format = "json";  // json or csv
  unsigned workers = 1;

  std::optional<double> x;  // ancestor type; state 0 or y = 1 by default
  std::string probe = "const";
  std::string simulator = "bgw";  // bgw, cmj or contour
  GridRange lambda_range;
  GridRange mu_range;
  double m = 2.0;  // phase-grid only
  std::vector<double> a{0.5, 0.5};
  std::vector<double> b{1.0};
};

std::string library_version();

/// Each returns the full report text in the configured format.
std::string cmd_classify(const RunConfig& cfg);
std::string cmd_phase_grid(const RunConfig& cfg);
std::string cmd_survive(const RunConfig& cfg);
std::string cmd_distribution(const RunConfig& cfg);
std::string cmd_simulate(const RunConfig& cfg);
std::string cmd_crosscheck(const RunConfig& cfg);
std::string cmd_limits(const RunConfig& cfg);
std::string cmd_yaglom(const RunConfig& cfg);
std::string cmd_renewal(const RunConfig& cfg);

/// Runs a command by name and writes to cfg.out or standard output.
/// Errors are rethrown as CommandError prefixed with the command name.
void run_command(const std::string& name, const RunConfig& cfg);

}  // namespace lfbp
