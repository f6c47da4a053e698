// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lfbp/commands.hpp"
#include "lfbp/evolution.hpp"
#include "lfbp/limits.hpp"
#include "lfbp/perron.hpp"
#include "lfbp/simulate.hpp"
#include "lfbp/spectral.hpp"
#include "lfbp/stats.hpp"
#include "test_support.hpp"

using namespace lfbp;
using lfbp::testing::random_finite;
using lfbp::testing::scalar;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;
unsigned workers = 4;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool ok, const std::string& what) {
  if (!ok) ++failures;
  std::printf("AC%-2d %s  %s\n", id, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Three-state kernel shared by the simulator criteria; m picks the regime.
FiniteTriplet three_state(double m) {
  Eigen::MatrixXd K(3, 3);
  K << 0.2, 0.3, 0.1, 0.1, 0.2, 0.4, 0.3, 0.3, 0.2;
  Eigen::VectorXd g(3);
  g << 0.3, 0.3, 0.4;
  return FiniteTriplet(K, g, m);
}

struct Instance {
  const char* name;
  FiniteTriplet triplet;
};

std::vector<Instance> regime_instances() {
  const double f1 = f_eval(life_length_law(three_state(1.0)), 1.0);
  return {{"subcritical", three_state(0.6 / f1)},
          {"critical", three_state(1.0 / f1)},
          {"supercritical", three_state(1.5 / f1)}};
}

void ac1() {
  const auto t0 = Clock::now();
  Rng rng(1001, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 5);
    const FiniteTriplet t = random_finite(rng, d);
    const int n = 1 + static_cast<int>(rng.uniform() * 20);
    Eigen::VectorXd h(d);
    for (int i = 0; i < d; ++i) h(i) = rng.uniform();
    const FiniteGenerationLaw g = evolve(t, n);
    for (Eigen::Index x = 0; x < d; ++x) {
      worst = std::max(worst, std::abs(gen_functional(g, x, h) - gen_functional_iterated(t, x, n, h)));
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-10 && secs < 10.0,
         fmt("closed-form generating functional vs one-step composition: 100 triplets, max |diff| = %.3g "
             "(tol 1e-10), %.2f s (budget 10 s)",
             worst, secs));
}

void ac2() {
  Rng rng(1002, 0);
  bool m_exact = true;
  double gamma_dev = 0.0, k_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const FiniteTriplet t = random_finite(rng, 1 + trial % 5);
    const FiniteGenerationLaw g = evolve(t, 1);
    m_exact = m_exact && g.m_n() == t.m();
    gamma_dev = std::max(gamma_dev, (g.gamma_n() - t.gamma()).cwiseAbs().maxCoeff());
    k_dev = std::max(k_dev, (g.Kn() - t.K()).cwiseAbs().maxCoeff());
  }
  report(2, m_exact && gamma_dev == 0.0 && k_dev == 0.0,
         fmt("one-step evolution returns the triplet, 100 random triplets: m_1 == m bitwise %s, "
             "max |gamma_1 - gamma| = %.3g, max |K_1 - K| = %.3g (required: exactly 0)",
             m_exact ? "yes" : "no", gamma_dev, k_dev));
}

void ac3() {
  const FiniteTriplet t = scalar(0.5, 1.0);
  double worst = 0.0;
  for (int n = 1; n <= 100; ++n) {
    worst = std::max(worst, std::abs(survival_prob(t, TypePoint::finite(0), n) * (1.0 + n) - 1.0));
  }
  const auto runs = run_replicates(100000, 3003, workers, [&](std::size_t, Rng& rng) {
    SimulationOptions opt;
    opt.keep_history = false;
    return simulate_bgw(t, TypePoint::finite(0), 10, rng, opt).sizes;
  });
  double worst_z = 0.0;
  for (int n = 1; n <= 10; ++n) {
    std::vector<double> alive;
    alive.reserve(runs.size());
    for (const auto& s : runs) alive.push_back(s[n] > 0 ? 1.0 : 0.0);
    const MeanSe ms = mc_mean_se(alive);
    worst_z = std::max(worst_z, std::abs(ms.mean - 1.0 / (1.0 + n)) / ms.se);
  }
  report(3, worst <= 1e-12 && worst_z <= 3.0,
         fmt("critical scalar survival: max relative |P - 1/(1+n)| = %.3g for n <= 100 (tol 1e-12); "
             "Monte Carlo 1e5 runs, n <= 10, max |z| = %.2f (tol 3)",
             worst, worst_z));
}

void ac4() {
  Rng rng(1004, 0);
  int count = 0;
  double root_dev = 0.0, resid = 0.0;
  while (count < 50) {
    const FiniteTriplet t = random_finite(rng, 2 + count % 4, 1.0, 3.0);
    const SpectralSummary s = analyze(Triplet(t));
    if (s.criticality != Criticality::supercritical) continue;
    const Eigen::MatrixXd M = t.mean_matrix();
    root_dev = std::max(root_dev, std::abs(1.0 / s.R - spectral_radius(M)));
    const Eigenpair e = eigen_build(t, s);
    const Eigen::VectorXd& u = *e.u_vector;
    const Eigen::VectorXd& nu = *e.nu_vector;
    resid = std::max(resid, (s.R * M * u - u).cwiseAbs().maxCoeff() / u.cwiseAbs().maxCoeff());
    resid = std::max(resid, (s.R * nu.transpose() * M - nu.transpose()).cwiseAbs().maxCoeff());
    ++count;
  }
  report(4, root_dev <= 1e-8 && resid <= 1e-6,
         fmt("50 supercritical triplets: max |1/R - power-iteration Perron root| = %.3g (tol 1e-8), "
             "max eigen residual = %.3g (tol 1e-6)",
             root_dev, resid));
}

void ac5() {
  const LifeLengthLaw law = life_length_law(ExpFamilyTriplet(1.0, 1.0, 1.0));
  double tail_dev = 0.0;
  for (int n = 0; n <= 20; ++n) {
    const double exact = std::exp(-std::lgamma(n + 2.0));
    tail_dev = std::max(tail_dev, std::abs(law.tail(n) - exact) / exact);
  }
  const double f1_dev = std::abs(f_eval(law, 1.0) - (std::numbers::e - 2.0));
  const auto draws = run_replicates(1000000, 5005, workers, [&](std::size_t, Rng& rng) {
    return static_cast<double>(sample_life_length(law, rng));
  });
  const MeanSe ms = mc_mean_se(draws);
  const double z = std::abs(ms.mean - (std::numbers::e - 1.0)) / ms.se;
  const double m_star = 1.0 / (std::numbers::e - 2.0);
  const double crit_dev = std::abs(m_star * f_eval(life_length_law(ExpFamilyTriplet(1.0, 1.0, m_star)), 1.0) - 1.0);
  report(5, tail_dev <= 1e-14 && f1_dev <= 1e-12 && z <= 3.0 && crit_dev <= 1e-10,
         fmt("lambda = mu = 1: max relative |d_n - 1/(n+1)!| = %.3g for n <= 20 (tol 1e-14); "
             "|f(1) - (e-2)| = %.3g (tol 1e-12); E L from 1e6 draws = %.5f, |z| = %.2f (tol 3); "
             "|m* f(1) - 1| = %.3g (tol 1e-10)",
             tail_dev, f1_dev, ms.mean, z, crit_dev));
}

void ac6_ac7() {
  const auto t0 = Clock::now();
  double min_ks = 1.0;
  std::string ks_worst;
  double min_chi = 1.0;
  std::string chi_worst;
  std::size_t min_conditioned = SIZE_MAX;
  std::uint64_t seed = 6000;
  for (const auto& inst : regime_instances()) {
    const LifeLengthLaw law = life_length_law(inst.triplet);
    const double m = inst.triplet.m();
    for (int n : {3, 6}) {
      const auto bgw = run_replicates(10000, ++seed, workers, [&](std::size_t, Rng& rng) {
        return static_cast<double>(simulate_bgw(inst.triplet, std::nullopt, n, rng).sizes[n]);
      });
      const auto cmj = run_replicates(10000, ++seed, workers, [&](std::size_t, Rng& rng) {
        return static_cast<double>(simulate_cmj(law, m, n, rng).sizes[n]);
      });
      const auto contour = run_replicates(10000, ++seed, workers, [&](std::size_t, Rng& rng) {
        return static_cast<double>(simulate_contour(law, m, n, rng).level_n_excursions);
      });
      const std::pair<const char*, double> pairs[] = {{"bgw/cmj", ks_two_sample(bgw, cmj).p_value},
                                                      {"bgw/contour", ks_two_sample(bgw, contour).p_value},
                                                      {"cmj/contour", ks_two_sample(cmj, contour).p_value}};
      for (const auto& [label, p] : pairs) {
        if (p <= min_ks) {
          min_ks = p;
          ks_worst = fmt("%s n=%d %s", inst.name, n, label);
        }
      }

      // Conditioned sizes from the direct simulator, enough runs for a few thousand survivors.
      const auto sizes = run_replicates(100000, ++seed, workers, [&](std::size_t, Rng& rng) {
        SimulationOptions opt;
        opt.keep_history = false;
        return static_cast<std::uint64_t>(simulate_bgw(inst.triplet, std::nullopt, n, rng, opt).sizes[n]);
      });
      std::vector<std::uint64_t> alive;
      for (auto z : sizes) {
        if (z > 0) alive.push_back(z);
      }
      min_conditioned = std::min(min_conditioned, alive.size());
      const auto totals = generation_totals(Triplet(inst.triplet), TypePoint::finite(0), n);
      const double p = chi_square_geometric(alive, totals[n].m_n).p_value;
      if (p <= min_chi) {
        min_chi = p;
        chi_worst = fmt("%s n=%d", inst.name, n);
      }
    }
  }
  const double secs = seconds_since(t0);
  report(6, min_ks > 0.01 && secs < 120.0,
         fmt("direct / CMJ / contour laws of Z_n, 3 regimes x n in {3, 6}, 1e4 runs each: min KS p = %.3g "
             "at %s (need > 0.01); %.1f s including criterion 7 (budget 120 s)",
             min_ks, ks_worst.c_str(), secs));
  report(7, min_chi > 0.01,
         fmt("Z_n given survival vs shifted geometric(m_n), same instances: min chi-square p = %.3g at %s "
             "(need > 0.01), at least %zu conditioned samples per test",
             min_chi, chi_worst.c_str(), min_conditioned));
}

void ac8() {
  const LimitReport r = limit_subcritical(Triplet(scalar(0.4, 1.0)), TypePoint::finite(0), parse_probe("const"));
  const LimitCheck* s = r.find("survival_scaled");
  const LimitCheck* mn = r.find("m_n_limit");
  const double s_dev = std::abs(s->grid.back().second - 1.0 / 6.0);
  const double m_dev = std::abs(mn->grid.back().second - 5.0);
  report(8, s->grid.back().first == 60 && s_dev <= 1e-3 && m_dev <= 1e-3,
         fmt("subcritical scalar k=0.4, m=1 at n = %d: |rho^-n P(Z_n>0) - 1/6| = %.3g, |m_n - 5| = %.3g "
             "(tol 1e-3); derived limits %.6f and %.6f",
             s->grid.back().first, s_dev, m_dev, r.derived.at("survival_scaled"), r.derived.at("m_tilde")));
}

void ac9() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream detail;
  LimitOptions crit_opt;
  crit_opt.tolerance = 1e-3;
  // Critical scalars: P(Z_n > 0) = 1 / (1 + m n), so n P -> 1/m.
  for (double m : {1.0, 2.0}) {
    const LimitReport r = limit_critical(Triplet(scalar(1.0 / (1.0 + m), m)), TypePoint::finite(0),
                                         parse_probe("const"), crit_opt);
    const double closed = 1.0 / m;
    const LimitCheck* d = r.find("survival_scaled_vs_derived");
    const LimitCheck* p = r.find("survival_scaled_vs_printed");
    const bool both_reported = r.derived.count("survival_scaled") && r.printed.count("survival_scaled");
    const bool good = both_reported && std::abs(r.derived.at("survival_scaled") - closed) <= 1e-9 * closed &&
                      d->passed() && p->verdict == "fail";
    ok = ok && good;
    detail << fmt("critical m=%g: n P -> %.6f, derived %.6f (%s), printed %.6f (%s); ", m, d->measured,
                  d->target, d->verdict.c_str(), p->target, p->verdict.c_str());
  }
  // Supercritical scalars: P(Z_n > 0) -> (rho - 1) / m with rho = k (1 + m).
  for (auto [k, m] : {std::pair{0.75, 1.0}, std::pair{0.5, 2.0}}) {
    const LimitReport r = limit_supercritical(Triplet(scalar(k, m)), TypePoint::finite(0), parse_probe("const"));
    const double closed = (k * (1.0 + m) - 1.0) / m;
    const LimitCheck* d = r.find("survival_vs_derived");
    const LimitCheck* p = r.find("survival_vs_printed");
    const bool both_reported = r.derived.count("survival") && r.printed.count("survival");
    const bool good = both_reported && std::abs(r.derived.at("survival") - closed) <= 1e-9 * closed &&
                      d->passed() && p->verdict == "fail";
    ok = ok && good;
    detail << fmt("supercritical k=%g m=%g: P -> %.6f, derived %.6f (%s), printed %.6f (%s); ", k, m,
                  d->measured, d->target, d->verdict.c_str(), p->target, p->verdict.c_str());
  }
  const double secs = seconds_since(t0);
  report(9, ok && secs < 1.0,
         detail.str() + fmt("%.3f s (budget 1 s)", secs));
}

void ac10() {
  const auto t0 = Clock::now();
  LimitOptions opt;
  opt.replicates = 200000;
  opt.mc_generation = 200;
  opt.seed = 10010;
  opt.workers = workers;
  opt.n_grid = {100, 150, 200};
  const LimitReport r = limit_critical(Triplet(scalar(0.5, 1.0)), TypePoint::finite(0), parse_probe("const"), opt);
  const LimitCheck* mean = r.find("yaglom_mean_vs_printed");
  const LimitCheck* ks = r.find("yaglom_ks_vs_printed");
  const LimitCheck* mean_d = r.find("yaglom_mean_vs_derived");
  const LimitCheck* ks_d = r.find("yaglom_ks_vs_derived");
  const bool ok = mean->passed() && ks->passed();
  report(10, ok,
         fmt("critical scalar k=0.5, m=1, n = 200, 2e5 runs, %zu conditioned: mean Z_n/n = %.4f +- %.4f vs 2 "
             "(%s), KS vs Exp(mean 2) p = %.3g (%s). Against the derived mean (1+m)/beta = %.4f: %s, KS p = %.3g "
             "(%s). Z_n given survival is geometric with mean 1 + n here, so the mean 2 is out of reach; %.1f s",
             mean->sample_size, mean->measured, mean->se.value_or(NAN), mean->verdict.c_str(),
             ks->p_value.value_or(NAN), ks->verdict.c_str(), mean_d->target, mean_d->verdict.c_str(),
             ks_d->p_value.value_or(NAN), ks_d->verdict.c_str(), seconds_since(t0)));
}

void ac11() {
  const RenewalSequences r = renewal_sequence({0.5, 0.5}, {1.0}, 200);
  const double dev = std::abs(r.c[200] - 2.0 / 3.0);
  const RenewalSequences p = renewal_sequence({0.0, 1.0}, {1.0}, 200);
  report(11, dev <= 1e-3 && r.aperiodic && !p.aperiodic && p.period == 2,
         fmt("renewal a = {1/2, 1/2}, b = {1}: |c_200 - 2/3| = %.3g (tol 1e-3); a = {0, 1} flagged with "
             "period %ld",
             dev, p.period));
}

void ac12() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.format = "csv";
  cfg.m = 2.0;
  const std::string csv = cmd_phase_grid(cfg);
  const double secs = seconds_since(t0);

  struct Cell {
    double alpha = NAN, mf1 = NAN;
  };
  const int N = 50;
  std::vector<Cell> grid;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("lambda", 0) == 0) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    Cell c;
    c.alpha = f[2].empty() ? NAN : std::stod(f[2]);
    c.mf1 = std::stod(f[5]);
    grid.push_back(c);
  }
  // The alpha = 0 contour runs between neighbouring cells whose alpha has
  // opposite signs; there |m f(1) - 1| must not exceed the change of m f(1)
  // across that grid step.
  std::size_t contour = 0, bad = 0;
  double worst = 0.0;
  auto visit = [&](const Cell& a, const Cell& b) {
    if (!(std::isfinite(a.alpha) && std::isfinite(b.alpha)) || (a.alpha > 0) == (b.alpha > 0)) return;
    ++contour;
    const double step = std::abs(a.mf1 - b.mf1);
    for (const Cell* c : {&a, &b}) {
      const double dev = std::abs(c->mf1 - 1.0);
      worst = std::max(worst, dev / step);
      if (dev > step) ++bad;
    }
  };
  if (grid.size() == static_cast<std::size_t>(N * N)) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (i + 1 < N) visit(grid[i * N + j], grid[(i + 1) * N + j]);
        if (j + 1 < N) visit(grid[i * N + j], grid[i * N + j + 1]);
      }
    }
  }
  report(12, grid.size() == 2500 && secs < 30.0 && contour > 0 && bad == 0,
         fmt("phase grid 50 x 50 at m = 2: %zu rows in %.2f s (budget 30 s); %zu neighbour pairs straddle "
             "alpha = 0, %zu cells with |m f(1) - 1| above the grid-step change (max ratio %.3f)",
             grid.size(), secs, contour, bad, worst));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) workers = static_cast<unsigned>(std::stoul(argv[1]));
  const auto t0 = Clock::now();
  ac1();
  ac2();
  ac3();
  ac4();
  ac5();
  ac6_ac7();
  ac8();
  ac9();
  ac10();
  ac11();
  ac12();
  std::printf("%d of 12 criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
