#include "lfbp/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "lfbp/evolution.hpp"
#include "lfbp/limits.hpp"
#include "lfbp/probe.hpp"
#include "lfbp/simulate.hpp"
#include "lfbp/spectral.hpp"
#include "lfbp/stats.hpp"
#include "lfbp/triplet_io.hpp"

namespace lfbp {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::size_t kDefaultReplicates = 10000;
const char* const kSimulators[] = {"bgw", "cmj", "contour"};

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Triplet require_triplet(const RunConfig& cfg) {
  if (cfg.triplet.empty()) throw CommandError("--triplet is required");
  return load_triplet(cfg.triplet);
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw CommandError("--seed is required for stochastic commands");
  return *cfg.seed;
}

void require_format(const RunConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv") {
    throw CommandError("--format must be json or csv, got '" + cfg.format + "'");
  }
}

TypePoint ancestor(const Triplet& t, const RunConfig& cfg) {
  if (const auto* f = std::get_if<FiniteTriplet>(&t)) {
    const double v = cfg.x.value_or(0.0);
    if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(f->dim())) {
      throw CommandError("--x must be a state index in [0, " + std::to_string(f->dim() - 1) + "]");
    }
    return TypePoint::finite(static_cast<std::size_t>(v));
  }
  const double v = cfg.x.value_or(1.0);
  if (!(v > 0.0) || !std::isfinite(v)) throw CommandError("--x must be a positive type");
  return TypePoint::real(v);
}

json config_json(const RunConfig& cfg, const std::string& command) {
  json c;
  c["command"] = command;
  c["triplet"] = cfg.triplet.empty() ? json(nullptr) : json::parse(triplet_to_json(load_triplet(cfg.triplet)));
  c["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  c["replicates"] = cfg.replicates ? json(*cfg.replicates) : json(nullptr);
  c["n"] = cfg.n;
  c["tol"] = cfg.tol ? json(*cfg.tol) : json(nullptr);
  c["format"] = cfg.format;
  c["x"] = cfg.x ? json(*cfg.x) : json(nullptr);
  c["probe"] = cfg.probe;
  c["simulator"] = cfg.simulator;
  c["lambda_range"] = {cfg.lambda_range.lo, cfg.lambda_range.hi, cfg.lambda_range.count};
  c["mu_range"] = {cfg.mu_range.lo, cfg.mu_range.hi, cfg.mu_range.count};
  c["m"] = cfg.m;
  c["a"] = cfg.a;
  c["b"] = cfg.b;
  return c;
}

std::string emit_json(const RunConfig& cfg, const std::string& command, json result) {
  json doc{{"schema", "lfbp." + command + "/" + std::to_string(kSchemaVersion)},
           {"version", library_version()},
           {"config", config_json(cfg, command)},
           {"result", std::move(result)}};
  return doc.dump(2) + "\n";
}

/// CSV with a two-line comment header carrying the version and the config.
std::string emit_csv(const RunConfig& cfg, const std::string& command,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  os << "# lfbp " << library_version() << " " << command << " schema " << kSchemaVersion << "\n";
  os << "# config " << config_json(cfg, command).dump() << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

json summary_json(const SpectralSummary& s) {
  return json{{"criticality", to_string(s.criticality)},
              {"recurrence", to_string(s.recurrence)},
              {"R", finite_or_null(s.R)},
              {"R_star", finite_or_null(s.R_star)},
              {"rho", s.rho},
              {"alpha", s.alpha ? json(*s.alpha) : json(nullptr)},
              {"beta", finite_or_null(s.beta)},
              {"mean_life", finite_or_null(s.mean_life)},
              {"m_f1", finite_or_null(s.m_f1)},
              {"bisections", s.bisections}};
}

/// Z_n from simulator k with the k-th substream of the replicate generator,
/// so `simulate` and `crosscheck` draw identical values.
std::uint64_t simulate_once(const Triplet& t, const LifeLengthLaw& law, int k, int n, Rng& rng) {
  Rng sub = rng.split(static_cast<std::uint64_t>(k));
  const double m = as_lf(t).m();
  switch (k) {
    case 0: {
      SimulationOptions opt;
      opt.keep_history = false;
      const BgwRun run = simulate_bgw(as_lf(t), std::nullopt, n, sub, opt);
      if (run.truncated) throw std::runtime_error("population cap exceeded");
      return run.sizes.back();
    }
    case 1: {
      const CmjRun run = simulate_cmj(law, m, n, sub);
      if (run.truncated) throw std::runtime_error("population cap exceeded");
      return run.sizes[n];
    }
    default: {
      const ContourWalk walk = simulate_contour(law, m, n, sub);
      if (walk.truncated) throw std::runtime_error("contour step cap exceeded");
      return walk.level_n_excursions;
    }
  }
}

int simulator_index(const std::string& name) {
  for (int k = 0; k < 3; ++k) {
    if (name == kSimulators[k]) return k;
  }
  throw CommandError("--simulator must be bgw, cmj or contour, got '" + name + "'");
}

void require_n(const RunConfig& cfg) {
  if (cfg.n < 0) throw CommandError("--n must be non-negative");
}

std::string tests_csv(const RunConfig& cfg, const std::string& command, const LimitReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : r.tests) {
    rows.push_back({t.name, t.method, t.target_kind, num(t.target), num(t.measured),
                    t.se ? num(*t.se) : "", t.p_value ? num(*t.p_value) : "", num(t.tolerance),
                    std::to_string(t.sample_size), t.verdict});
  }
  return emit_csv(cfg, command,
                  {"name", "method", "target_kind", "target", "measured", "se", "p_value",
                   "tolerance", "sample_size", "verdict"},
                  rows);
}

}  // namespace

GridRange parse_range(const std::string& text) {
  GridRange g;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> g.lo >> c1 >> g.hi >> c2 >> g.count) || c1 != ':' || c2 != ':' || !is.eof()) {
    throw CommandError("range '" + text + "': expected LO:HI:COUNT");
  }
  if (!(g.lo > 0.0) || !(g.hi >= g.lo) || g.count < 1) {
    throw CommandError("range '" + text + "': need 0 < LO <= HI and COUNT >= 1");
  }
  return g;
}

std::string library_version() { return LFBP_VERSION; }

std::string cmd_classify(const RunConfig& cfg) {
  require_format(cfg);
  const Triplet t = require_triplet(cfg);
  const SpectralSummary s = analyze(t);
  if (cfg.format == "csv") {
    return emit_csv(cfg, "classify",
                    {"criticality", "recurrence", "R", "R_star", "rho", "alpha", "beta",
                     "mean_life", "m_f1"},
                    {{to_string(s.criticality), to_string(s.recurrence), num(s.R), num(s.R_star),
                      num(s.rho), s.alpha ? num(*s.alpha) : "", num(s.beta), num(s.mean_life),
                      num(s.m_f1)}});
  }
  return emit_json(cfg, "classify", summary_json(s));
}

std::string cmd_phase_grid(const RunConfig& cfg) {
  require_format(cfg);
  if (!(cfg.m > 0.0)) throw CommandError("--m must be positive");
  const auto node = [](const GridRange& g, int i) {
    return g.count == 1 ? g.lo : g.lo + (g.hi - g.lo) * i / (g.count - 1);
  };
  std::vector<std::vector<std::string>> rows;
  json out = json::array();
  for (int i = 0; i < cfg.lambda_range.count; ++i) {
    for (int j = 0; j < cfg.mu_range.count; ++j) {
      const double lambda = node(cfg.lambda_range, i), mu = node(cfg.mu_range, j);
      const SpectralSummary s = analyze(life_length_law(ExpFamilyTriplet(lambda, mu, cfg.m)), cfg.m);
      rows.push_back({num(lambda), num(mu), s.alpha ? num(*s.alpha) : "", num(s.beta),
                      num(s.mean_life), num(s.m_f1), to_string(s.criticality)});
      out.push_back({{"lambda", lambda},
                     {"mu", mu},
                     {"alpha", s.alpha ? json(*s.alpha) : json(nullptr)},
                     {"beta", finite_or_null(s.beta)},
                     {"mean_life", s.mean_life},
                     {"m_f1", s.m_f1},
                     {"class", to_string(s.criticality)}});
    }
  }
  if (cfg.format == "csv") {
    return emit_csv(cfg, "phase-grid", {"lambda", "mu", "alpha", "beta", "mean_life", "m_f1", "class"},
                    rows);
  }
  return emit_json(cfg, "phase-grid", json{{"m", cfg.m}, {"rows", std::move(out)}});
}

std::string cmd_survive(const RunConfig& cfg) {
  require_format(cfg);
  require_n(cfg);
  const Triplet t = require_triplet(cfg);
  const TypePoint x = ancestor(t, cfg);
  const auto totals = generation_totals(t, x, cfg.n);
  if (cfg.format == "csv") {
    std::vector<std::vector<std::string>> rows;
    for (const auto& g : totals) rows.push_back({std::to_string(g.n), num(g.m_n), num(g.survival())});
    return emit_csv(cfg, "survive", {"n", "m_n", "survival"}, rows);
  }
  json table = json::array();
  for (const auto& g : totals) table.push_back({{"n", g.n}, {"m_n", g.m_n}, {"survival", g.survival()}});
  return emit_json(cfg, "survive",
                   json{{"n", cfg.n}, {"x", x.coordinate()}, {"survival", totals.back().survival()},
                        {"table", std::move(table)}});
}

std::string cmd_distribution(const RunConfig& cfg) {
  require_format(cfg);
  if (cfg.n < 1) throw CommandError("--n must be at least 1");
  const Triplet t = require_triplet(cfg);
  const TypePoint x = ancestor(t, cfg);
  const Probe h = parse_probe(cfg.probe);
  require_nested_integrable(h, t);
  const auto law = evolve(t, cfg.n);
  const double functional = gen_functional(*law, x, h.fn);
  const double extinction = gen_functional(*law, x, constant_function(0.0));
  json r{{"n", cfg.n},
         {"x", x.coordinate()},
         {"m_n", law->m_n()},
         {"survival", law->survival(x)},
         {"mean_mass", law->mean_mass(x)},
         {"gamma_n_mixture_weights", law->weights()},
         {"functional", {{"probe", h.source}, {"value", functional}}},
         {"extinction", extinction}};
  if (const auto* f = dynamic_cast<const FiniteGenerationLaw*>(law.get())) {
    const auto xi = static_cast<Eigen::Index>(x.index());
    r["gamma_n"] = std::vector<double>(f->gamma_n().data(), f->gamma_n().data() + f->gamma_n().size());
    const Eigen::VectorXd row = f->Kn().row(xi).transpose();
    r["K_n_row"] = std::vector<double>(row.data(), row.data() + row.size());
  }
  if (cfg.format == "csv") {
    return emit_csv(cfg, "distribution",
                    {"n", "x", "m_n", "survival", "mean_mass", "probe", "functional", "extinction"},
                    {{std::to_string(cfg.n), num(x.coordinate()), num(law->m_n()),
                      num(law->survival(x)), num(law->mean_mass(x)), h.source, num(functional),
                      num(extinction)}});
  }
  return emit_json(cfg, "distribution", std::move(r));
}

std::string cmd_simulate(const RunConfig& cfg) {
  require_format(cfg);
  require_n(cfg);
  const Triplet t = require_triplet(cfg);
  const std::uint64_t seed = require_seed(cfg);
  const int k = simulator_index(cfg.simulator);
  const LifeLengthLaw law = life_length_law(t);
  const std::size_t reps = cfg.replicates.value_or(kDefaultReplicates);
  const auto z = run_replicates(reps, seed, cfg.workers, [&](std::size_t, Rng& rng) {
    return simulate_once(t, law, k, cfg.n, rng);
  });
  if (cfg.format == "csv") {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      rows.push_back({std::to_string(i), std::to_string(cfg.n), std::to_string(z[i]), z[i] > 0 ? "1" : "0"});
    }
    return emit_csv(cfg, "simulate", {"replicate", "n", "Z_n", "survived"}, rows);
  }
  json rows = json::array();
  std::size_t alive = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    alive += z[i] > 0;
    rows.push_back({{"replicate", i}, {"n", cfg.n}, {"Z_n", z[i]}, {"survived", z[i] > 0}});
  }
  return emit_json(cfg, "simulate",
                   json{{"simulator", cfg.simulator},
                        {"survival_fraction", reps ? static_cast<double>(alive) / reps : 0.0},
                        {"replicates", std::move(rows)}});
}

std::string cmd_crosscheck(const RunConfig& cfg) {
  require_format(cfg);
  require_n(cfg);
  const Triplet t = require_triplet(cfg);
  const std::uint64_t seed = require_seed(cfg);
  const LifeLengthLaw law = life_length_law(t);
  const std::size_t reps = cfg.replicates.value_or(kDefaultReplicates);
  const auto draws = run_replicates(reps, seed, cfg.workers, [&](std::size_t, Rng& rng) {
    std::array<std::uint64_t, 3> z{};
    for (int k = 0; k < 3; ++k) z[k] = simulate_once(t, law, k, cfg.n, rng);
    return z;
  });
  std::array<std::vector<double>, 3> samples;
  for (const auto& z : draws) {
    for (int k = 0; k < 3; ++k) samples[k].push_back(static_cast<double>(z[k]));
  }

  // Exact P(Z_n > 0) from a gamma-distributed ancestor: G_n / (1 + m_n),
  // with m G_n = m_{n+1} - m_n.
  const double m = as_lf(t).m();
  const TypePoint x0 = std::holds_alternative<FiniteTriplet>(t) ? TypePoint::finite(0) : TypePoint::real(1.0);
  const auto totals = generation_totals(t, x0, cfg.n + 1);
  const double exact = m > 0.0 ? (totals[cfg.n + 1].m_n - totals[cfg.n].m_n) / (m * (1.0 + totals[cfg.n].m_n))
                               : (cfg.n == 0 ? 1.0 : std::nan(""));

  json table = json::array();
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const KsResult ks = ks_two_sample(samples[i], samples[j]);
      table.push_back({{"a", kSimulators[i]}, {"b", kSimulators[j]}, {"statistic", ks.statistic}, {"p_value", ks.p_value}});
      rows.push_back({kSimulators[i], kSimulators[j], num(ks.statistic), num(ks.p_value)});
    }
  }
  if (cfg.format == "csv") return emit_csv(cfg, "crosscheck", {"a", "b", "statistic", "p_value"}, rows);

  json sims = json::array();
  for (int k = 0; k < 3; ++k) {
    const MeanSe ms = mc_mean_se(samples[k]);
    std::size_t alive = 0;
    for (double v : samples[k]) alive += v > 0.0;
    sims.push_back({{"simulator", kSimulators[k]},
                    {"mean", ms.mean},
                    {"se", ms.se},
                    {"survival_fraction", static_cast<double>(alive) / reps}});
  }
  return emit_json(cfg, "crosscheck",
                   json{{"n", cfg.n}, {"exact_survival", finite_or_null(exact)}, {"simulators", std::move(sims)},
                        {"ks", std::move(table)}});
}

std::string cmd_limits(const RunConfig& cfg) {
  require_format(cfg);
  const Triplet t = require_triplet(cfg);
  const TypePoint x = ancestor(t, cfg);
  LimitOptions opt;
  if (cfg.tol) opt.tolerance = *cfg.tol;
  opt.replicates = cfg.replicates.value_or(0);
  if (opt.replicates > 0) opt.seed = require_seed(cfg);
  opt.workers = cfg.workers;
  const LimitReport r = limit_report(t, x, parse_probe(cfg.probe), opt);
  if (cfg.format == "csv") return tests_csv(cfg, "limits", r);
  return emit_json(cfg, "limits", to_json(r));
}

std::string cmd_yaglom(const RunConfig& cfg) {
  require_format(cfg);
  if (cfg.n < 1) throw CommandError("--n must be at least 1");
  const Triplet t = require_triplet(cfg);
  const TypePoint x = ancestor(t, cfg);
  LimitOptions opt;
  if (cfg.tol) opt.tolerance = *cfg.tol;
  opt.replicates = cfg.replicates.value_or(kDefaultReplicates);
  opt.seed = require_seed(cfg);
  opt.workers = cfg.workers;
  opt.mc_generation = cfg.n;
  const Probe w = parse_probe(cfg.probe);
  const LifeLengthLaw law = life_length_law(t);
  LimitReport r;
  switch (classify(law, as_lf(t).m())) {
    case Criticality::critical:
      r = limit_critical(t, x, w, opt);
      break;
    case Criticality::supercritical:
      r = limit_supercritical(t, x, w, opt);
      break;
    default:
      throw CommandError("the conditioned limit law needs a critical or supercritical process");
  }
  std::erase_if(r.tests, [](const LimitCheck& c) { return c.method != "monte_carlo"; });
  if (cfg.format == "csv") return tests_csv(cfg, "yaglom", r);
  return emit_json(cfg, "yaglom", to_json(r));
}

std::string cmd_renewal(const RunConfig& cfg) {
  require_format(cfg);
  require_n(cfg);
  const RenewalSequences r = renewal_sequence(cfg.a, cfg.b, cfg.n);
  if (cfg.format == "csv") {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < r.c.size(); ++i) rows.push_back({std::to_string(i), num(r.c[i])});
    return emit_csv(cfg, "renewal", {"n", "c_n"}, rows);
  }
  json result{{"limit", r.limit},
              {"period", r.period},
              {"aperiodic", r.aperiodic},
              {"tail_deviation", r.tail_deviation},
              {"last", r.c.back()},
              {"c", r.c}};
  if (!r.aperiodic) {
    result["warning"] = "support of a has period " + std::to_string(r.period) + "; c_n need not converge";
  }
  return emit_json(cfg, "renewal", std::move(result));
}

void run_command(const std::string& name, const RunConfig& cfg) {
  static const std::map<std::string, std::function<std::string(const RunConfig&)>> table{
      {"classify", cmd_classify},     {"phase-grid", cmd_phase_grid}, {"survive", cmd_survive},
      {"distribution", cmd_distribution}, {"simulate", cmd_simulate}, {"crosscheck", cmd_crosscheck},
      {"limits", cmd_limits},         {"yaglom", cmd_yaglom},         {"renewal", cmd_renewal}};
  const auto it = table.find(name);
  if (it == table.end()) throw CommandError("unknown command '" + name + "'");
  std::string text;
  try {
    text = it->second(cfg);
  } catch (const std::exception& e) {
    throw CommandError(name + ": " + e.what());
  }
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(cfg.out, std::ios::binary);
  if (!os) throw CommandError(name + ": cannot open '" + cfg.out + "' for writing");
  os << text;
}

}  // namespace lfbp
