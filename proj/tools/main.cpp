#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lfbp/commands.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw lfbp::CommandError("bad number '" + item + "' in list");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-fractional branching processes: exact laws, spectra, simulation"};
  app.set_version_flag("--version", lfbp::library_version());
  app.require_subcommand(1);

  lfbp::RunConfig cfg;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  double tol = 0.0, x = 0.0;
  std::string lambda_range = "0.25:4:50", mu_range = "0.25:4:50", a_list = "0.5,0.5", b_list = "1";

  auto common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--triplet", cfg.triplet, "Triplet as inline JSON or a file path");
    sub->add_option("--n", cfg.n, "Generation / horizon")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output file (default: standard output)");
    sub->add_option("--format", cfg.format, "json or csv")->capture_default_str();
    sub->add_option("--x", x, "Ancestor type (state index for finite triplets)");
    sub->add_option("--tol", tol, "Relative tolerance for limit verdicts");
    if (stochastic) {
      sub->add_option("--seed", seed, "64-bit seed; replicate i uses stream (seed, i)");
      sub->add_option("--reps", reps, "Replicates");
      sub->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
    }
  };

  auto* classify = app.add_subcommand("classify", "Criticality, recurrence, R, rho, alpha, beta, E L");
  common(classify, false);
  auto* grid = app.add_subcommand("phase-grid", "(lambda, mu) grid of alpha, beta, E L, class as data");
  common(grid, false);
  grid->add_option("--lambda-range", lambda_range, "LO:HI:COUNT")->capture_default_str();
  grid->add_option("--mu-range", mu_range, "LO:HI:COUNT")->capture_default_str();
  grid->add_option("--m", cfg.m, "Mean litter size")->capture_default_str();
  auto* survive = app.add_subcommand("survive", "P(Z_k > 0) and m_k for k <= n");
  common(survive, false);
  auto* distribution = app.add_subcommand("distribution", "The n-th generation triplet and functionals");
  common(distribution, false);
  distribution->add_option("--probe", cfg.probe, "Test function h with values in [0, 1]")->capture_default_str();
  auto* simulate = app.add_subcommand("simulate", "Per-replicate Z_n from one simulator");
  common(simulate, true);
  simulate->add_option("--simulator", cfg.simulator, "bgw, cmj or contour")->capture_default_str();
  auto* crosscheck = app.add_subcommand("crosscheck", "Pairwise KS table of the three simulators");
  common(crosscheck, true);
  auto* limits = app.add_subcommand("limits", "Limit report for the regime of the triplet");
  common(limits, true);
  limits->add_option("--probe", cfg.probe, "Probe w")->capture_default_str();
  auto* yaglom = app.add_subcommand("yaglom", "Conditioned limit law by Monte Carlo");
  common(yaglom, true);
  yaglom->add_option("--probe", cfg.probe, "Probe w")->capture_default_str();
  auto* renewal = app.add_subcommand("renewal", "Coefficients of b(s) / (1 - a(s))");
  common(renewal, false);
  renewal->add_option("--a", a_list, "a_1,a_2,...")->capture_default_str();
  renewal->add_option("--b", b_list, "b_0,b_1,...")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    auto given = [sub](const char* name) {
      const CLI::Option* o = sub->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    if (given("--seed")) cfg.seed = seed;
    if (given("--reps")) cfg.replicates = reps;
    if (given("--tol")) cfg.tol = tol;
    if (given("--x")) cfg.x = x;
    if (sub == grid) {
      cfg.lambda_range = lfbp::parse_range(lambda_range);
      cfg.mu_range = lfbp::parse_range(mu_range);
    }
    if (sub == renewal) {
      cfg.a = parse_list(a_list);
      cfg.b = parse_list(b_list);
    }
    lfbp::run_command(sub->get_name(), cfg);
  } catch (const std::exception& e) {
    std::cerr << "lfbp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
