#include "doctest.h"

#include <cmath>
#include <numbers>

#include "lfbp/evolution.hpp"
#include "lfbp/simulate.hpp"
#include "lfbp/spectral.hpp"
#include "lfbp/stats.hpp"
#include "test_support.hpp"

using namespace lfbp;
using lfbp::testing::scalar;

namespace {

FiniteTriplet three_state(double m) {
  Eigen::MatrixXd K(3, 3);
  K << 0.2, 0.3, 0.1, 0.1, 0.2, 0.4, 0.3, 0.3, 0.2;
  Eigen::VectorXd g(3);
  g << 0.3, 0.3, 0.4;
  return FiniteTriplet(K, g, m);
}

}  // namespace

TEST_CASE("critical scalar survival by direct simulation") {
  const FiniteTriplet t = scalar(0.5, 1.0);
  const int n = 6;
  const auto runs = run_replicates(100000, 7, 4, [&](std::size_t, Rng& rng) {
    SimulationOptions opt;
    opt.keep_history = false;
    return simulate_bgw(t, TypePoint::finite(0), n, rng, opt).sizes;
  });
  for (int g = 1; g <= n; ++g) {
    std::vector<double> alive;
    for (const auto& s : runs) alive.push_back(s[g] > 0 ? 1.0 : 0.0);
    const MeanSe ms = mc_mean_se(alive);
    CHECK(std::abs(ms.mean - 1.0 / (1.0 + g)) <= 3.0 * ms.se);
  }
}

TEST_CASE("life length: tail frequencies and mean for lambda = mu = 1") {
  const LifeLengthLaw law = life_length_law(ExpFamilyTriplet(1.0, 1.0, 2.0));
  Rng rng(11, 0);
  std::vector<double> lengths;
  for (int i = 0; i < 200000; ++i) lengths.push_back(sample_life_length(law, rng));
  const MeanSe ms = mc_mean_se(lengths);
  CHECK(std::abs(ms.mean - (std::numbers::e - 1.0)) <= 4.0 * ms.se);
  // P(L > n) = 1 / (n + 1)!.
  for (int n : {1, 2, 3}) {
    double over = 0.0;
    for (double l : lengths) over += l > n;
    const double p = std::exp(-std::lgamma(n + 2.0));
    CHECK(std::abs(over / lengths.size() - p) <= 4.0 * std::sqrt(p * (1 - p) / lengths.size()));
  }
}

TEST_CASE("typed lineage from a gamma start has length L") {
  const FiniteTriplet t = three_state(1.0);
  const LifeLengthLaw law = life_length_law(t);
  std::vector<double> len;
  for (std::uint64_t i = 0; i < 50000; ++i) {
    Rng rng(13, i);
    len.push_back(static_cast<double>(simulate_typed_lineage(t, t.immigration().sample(rng), rng).size()));
  }
  for (int n : {1, 2, 4}) {
    double over = 0.0;
    for (double l : len) over += l > n;
    const double p = law.tail(n);
    CHECK(std::abs(over / len.size() - p) <= 4.0 * std::sqrt(p * (1 - p) / len.size()));
  }
}

TEST_CASE("three simulators have the mean of Z_n from a gamma start") {
  // E Z_n = int M^n(y, E) gamma(dy) = (m_{n+1} - m_n) / m.
  const FiniteTriplet t = three_state(1.6);
  const LifeLengthLaw law = life_length_law(t);
  const int n = 4;
  const auto totals = generation_totals(Triplet(t), TypePoint::finite(0), n + 1);
  const double mean = (totals[n + 1].m_n - totals[n].m_n) / t.m();
  const std::size_t reps = 40000;
  const auto bgw = run_replicates(reps, 17, 4, [&](std::size_t, Rng& rng) {
    return static_cast<double>(simulate_bgw(t, std::nullopt, n, rng).sizes[n]);
  });
  const auto cmj = run_replicates(reps, 19, 4, [&](std::size_t, Rng& rng) {
    return static_cast<double>(simulate_cmj(law, t.m(), n, rng).sizes[n]);
  });
  const auto contour = run_replicates(reps, 23, 4, [&](std::size_t, Rng& rng) {
    return static_cast<double>(simulate_contour(law, t.m(), n, rng).level_n_excursions);
  });
  for (const auto* s : {&bgw, &cmj, &contour}) {
    const MeanSe ms = mc_mean_se(*s);
    CHECK(std::abs(ms.mean - mean) <= 4.0 * ms.se);
  }
  CHECK(ks_two_sample(bgw, cmj).p_value > 0.01);
  CHECK(ks_two_sample(bgw, contour).p_value > 0.01);
  CHECK(ks_two_sample(cmj, contour).p_value > 0.01);
}

TEST_CASE("contour path moves down by one or jumps up, and stays in [0, n]") {
  const LifeLengthLaw law = life_length_law(three_state(2.0));
  const int n = 5;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng(29, i);
    const ContourWalk w = simulate_contour(law, 2.0, n, rng, true);
    REQUIRE(!w.path.empty());
    CHECK(w.path.front() == 0);
    CHECK(w.path.back() >= 0);
    for (std::size_t k = 1; k < w.path.size(); ++k) {
      CHECK(w.path[k] >= 0);
      CHECK(w.path[k] <= n);
      CHECK(w.path[k] >= w.path[k - 1] - 1);
    }
    std::size_t at_top = 0;
    for (std::size_t k = 1; k < w.path.size(); ++k) at_top += w.path[k] == n && w.path[k - 1] < n;
    CHECK(at_top <= w.level_n_excursions);
  }
}

TEST_CASE("CMJ population starts with one newborn") {
  const LifeLengthLaw law = life_length_law(three_state(1.0));
  Rng rng(31, 0);
  for (int i = 0; i < 100; ++i) CHECK(simulate_cmj(law, 1.0, 5, rng).sizes[0] == 1);
}

TEST_CASE("population cap marks runs as truncated") {
  const FiniteTriplet t = scalar(0.9, 4.0);
  Rng rng(37, 0);
  SimulationOptions opt;
  opt.population_cap = 50;
  bool any = false;
  for (int i = 0; i < 50 && !any; ++i) any = simulate_bgw(t, TypePoint::finite(0), 20, rng, opt).truncated;
  CHECK(any);
}

TEST_CASE("replicates do not depend on the worker count") {
  const FiniteTriplet t = three_state(1.2);
  auto fn = [&](std::size_t, Rng& rng) { return simulate_bgw(t, std::nullopt, 5, rng).sizes[5]; };
  const auto one = run_replicates(3000, 41, 1, fn);
  const auto four = run_replicates(3000, 41, 4, fn);
  const auto seven = run_replicates(3000, 41, 7, fn);
  CHECK(one == four);
  CHECK(one == seven);
}

TEST_CASE("exceptions in a replicate reach the caller") {
  auto fn = [](std::size_t i, Rng&) -> int {
    if (i == 17) throw std::runtime_error("boom");
    return 0;
  };
  CHECK_THROWS_AS(run_replicates(100, 1, 3, fn), std::runtime_error);
}
