#include "lfbp/simulate.hpp"

#include <stdexcept>

namespace lfbp {

BgwRun simulate_bgw(const LFTriplet& triplet, const std::optional<TypePoint>& start, int n,
                    Rng& rng, const SimulationOptions& opt) {
  if (n < 0) throw std::invalid_argument("simulate_bgw: n must be non-negative");
  BgwRun run;
  run.sizes.reserve(n + 1);
  GenerationSnapshot current;
  current.generation = 0;
  current.points.push_back(start ? *start : triplet.immigration().sample(rng));
  run.sizes.push_back(1);
  if (opt.keep_history) run.snapshots.push_back(current);

  for (int g = 1; g <= n; ++g) {
    GenerationSnapshot next;
    next.generation = g;
    if (!run.truncated) {
      for (const auto& p : current.points) {
        append_offspring(triplet, p, rng, next.points);
        if (next.points.size() > opt.population_cap) {
          run.truncated = true;
          break;
        }
      }
    }
    run.sizes.push_back(next.size());
    current = std::move(next);
    if (opt.keep_history) run.snapshots.push_back(current);
  }
  if (!opt.keep_history) run.snapshots.push_back(std::move(current));
  return run;
}

int sample_life_length(const LifeLengthLaw& law, Rng& rng) {
  const auto& d = law.tail_table();
  const double u = rng.uniform();
  // First n with d_n < u; d is non-increasing and d_0 = 1 > u.
  const auto it = std::partition_point(d.begin(), d.end(), [u](double v) { return v >= u; });
  return static_cast<int>(it - d.begin());
}

CMJIndividual sample_cmj_individual(const LifeLengthLaw& law, double m, int birth_time,
                                    int horizon, Rng& rng) {
  CMJIndividual ind;
  ind.birth_time = birth_time;
  ind.life_length = sample_life_length(law, rng);
  const int last_age = std::min(ind.life_length - 1, horizon - birth_time);
  for (int age = 1; age <= last_age; ++age) ind.litters.push_back(rng.geometric_mean(m));
  return ind;
}

CmjRun simulate_cmj(const LifeLengthLaw& law, double m, int n, Rng& rng,
                    std::size_t population_cap) {
  if (n < 0) throw std::invalid_argument("simulate_cmj: n must be non-negative");
  CmjRun run;
  run.sizes.assign(n + 1, 0);
  std::vector<int> pending{0};  // birth times awaiting processing
  std::size_t born = 1;
  while (!pending.empty()) {
    const int b = pending.back();
    pending.pop_back();
    const CMJIndividual ind = sample_cmj_individual(law, m, b, n, rng);
    const int last_alive = std::min(b + ind.life_length - 1, n);
    for (int t = b; t <= last_alive; ++t) ++run.sizes[t];
    for (std::size_t a = 0; a < ind.litters.size(); ++a) {
      born += ind.litters[a];
      if (born > population_cap) {
        run.truncated = true;
        return run;
      }
      pending.insert(pending.end(), ind.litters[a], b + static_cast<int>(a) + 1);
    }
  }
  return run;
}

ContourWalk simulate_contour(const LifeLengthLaw& law, double m, int n, Rng& rng,
                             bool record_path, std::size_t step_cap) {
  if (n < 0) throw std::invalid_argument("simulate_contour: n must be non-negative");
  ContourWalk walk;
  const double spawn = m / (1.0 + m);
  struct Open {
    int level;
    int floor;
  };
  std::vector<Open> stack;

  auto up_jump = [&](int from) {
    const int L = sample_life_length(law, rng);
    const int peak = from + L - 1;
    if (peak >= n) ++walk.level_n_excursions;
    const int top = std::min(peak, n);
    stack.push_back({top, from});
    if (record_path) walk.path.push_back(top);
  };

  if (record_path) walk.path.push_back(0);
  up_jump(0);
  while (!stack.empty()) {
    if (++walk.steps > step_cap) {
      walk.truncated = true;
      return walk;
    }
    Open& cur = stack.back();
    if (cur.level <= cur.floor) {
      stack.pop_back();
      continue;
    }
    if (rng.bernoulli(spawn)) {
      const int from = cur.level;
      if (record_path) walk.path.push_back(from);
      up_jump(from);
    } else {
      --cur.level;
      if (record_path) walk.path.push_back(cur.level);
    }
  }
  return walk;
}

std::vector<TypePoint> simulate_typed_lineage(const LFTriplet& triplet, const TypePoint& x,
                                              Rng& rng, std::size_t max_length) {
  std::vector<TypePoint> path{x};
  while (rng.uniform() < triplet.kernel().mass(path.back())) {
    if (path.size() >= max_length) {
      throw std::runtime_error("simulate_typed_lineage: path exceeded the length cap");
    }
    path.push_back(triplet.kernel().sample_marked(path.back(), rng));
  }
  return path;
}

}  // namespace lfbp
