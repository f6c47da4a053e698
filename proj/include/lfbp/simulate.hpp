#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "lfbp/spectral.hpp"
#include "lfbp/typespace.hpp"

namespace lfbp {

inline constexpr std::size_t kDefaultPopulationCap = 10'000'000;

struct SimulationOptions {
  std::size_t population_cap = kDefaultPopulationCap;
  /// Keep every generation's points; otherwise only the last one.
  bool keep_history = true;
};

/// Direct generation-by-generation run. `sizes` always covers 0..n.
struct BgwRun {
  std::vector<std::size_t> sizes;
  std::vector<GenerationSnapshot> snapshots;
  /// Population cap hit; sizes beyond the truncation point are meaningless.
  bool truncated = false;
};

/// Starts from `start`, or from a gamma-distributed ancestor when empty.
BgwRun simulate_bgw(const LFTriplet& triplet, const std::optional<TypePoint>& start, int n,
                    Rng& rng, const SimulationOptions& opt = {});

/// L with P(L > n) = d_n, by inversion of the tabulated tail. The mass beyond
/// the truncation index goes to N_max + 1.
int sample_life_length(const LifeLengthLaw& law, Rng& rng);

struct CMJIndividual {
  int birth_time = 0;
  int life_length = 1;
  /// litters[a - 1] is the litter at age a = 1..L-1 (cut at the horizon).
  std::vector<std::uint64_t> litters;
};

/// One individual: L from the law, then geometric(mean m) litters at ages
/// 1..L-1, not recording litters born after `horizon`.
CMJIndividual sample_cmj_individual(const LifeLengthLaw& law, double m, int birth_time,
                                    int horizon, Rng& rng);

struct CmjRun {
  /// Individuals alive at time t: born at b <= t with b + L - 1 >= t.
  std::vector<std::size_t> sizes;
  bool truncated = false;
};

/// Embedded Crump-Mode-Jagers population started by one newborn at time 0.
CmjRun simulate_cmj(const LifeLengthLaw& law, double m, int n, Rng& rng,
                    std::size_t population_cap = kDefaultPopulationCap);

struct ContourWalk {
  /// Heights visited, when recording was requested.
  std::vector<int> path;
  std::size_t level_n_excursions = 0;
  std::size_t steps = 0;
  bool truncated = false;
};

/// Alternating walk around the CMJ tree cut at height n: each up-jump has
/// the size of a life length (stopping at n), and on every unit of descent
/// a Bernoulli(m / (1 + m)) trial starts a new up-excursion. Returns the
/// number of excursions that reach level n, which is Z_n in law.
ContourWalk simulate_contour(const LifeLengthLaw& law, double m, int n, Rng& rng,
                             bool record_path = false, std::size_t step_cap = 100'000'000);

/// Chain on E plus a graveyard: from x move by kappa_x with probability
/// K(x, E), otherwise absorb. Returns the visited types (x included); from a
/// gamma-distributed start the length is L.
std::vector<TypePoint> simulate_typed_lineage(const LFTriplet& triplet, const TypePoint& x,
                                              Rng& rng, std::size_t max_length = 10'000'000);

/// Runs fn(i, rng_i) for i in [0, count) with rng_i = Rng(seed, i) on
/// `workers` threads. The result vector is indexed by replicate, so the
/// output does not depend on the worker count.
template <typename Fn>
auto run_replicates(std::size_t count, std::uint64_t seed, unsigned workers, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<Rng&>()))> {
  using Result = decltype(fn(std::size_t{}, std::declval<Rng&>()));
  std::vector<Result> out(count);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < count; i += workers) {
        Rng rng(seed, i);
        out[i] = fn(i, rng);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace lfbp
