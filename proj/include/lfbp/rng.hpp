#pragma once

#include <cmath>
#include <cstdint>

namespace lfbp {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// The k-th output of the stream keyed by `key` is mix64(key + k * golden),
/// so a stream is fully determined by (seed, stream index) and the position
/// within it. Stream derivation: key = mix64(mix64(seed) ^ (stream * C + 1))
/// with C = 0xD1B54A32D192ED03. Replicate i of a run seeded with s always
/// draws from Rng(s, i), independent of how replicates are scheduled.
///
/// Samplers are written out by hand (inversion where possible) so that
/// results are bit-identical across standard library implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1))) {}

  std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

  /// Child stream; does not advance this one.
  Rng split(std::uint64_t index) const { return Rng(key_, index); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Geometric on {0, 1, 2, ...} with P(j) = (1 - q) q^j, by inversion.
  std::uint64_t geometric0(double q) {
    if (q <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::floor(std::log(uniform()) / std::log(q)));
  }

  /// Litter size with mean m: P(j) = m^j / (1 + m)^(j + 1).
  std::uint64_t geometric_mean(double m) { return geometric0(m / (1.0 + m)); }

  /// Shifted geometric on {1, 2, ...}: P(k) = m^(k-1) / (1 + m)^k.
  std::uint64_t shifted_geometric(double m) { return 1 + geometric_mean(m); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lfbp
