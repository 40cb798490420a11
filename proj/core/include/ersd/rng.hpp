#pragma once

#include <cstdint>
#include <limits>

#include "ersd/types.hpp"

namespace ersd {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed splitting. The result depends only on the three
/// arguments, never on the order in which streams are requested, so
/// realizations can be scheduled on any worker without changing results.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ (stream * 0xd1b54a32d192ed03ULL)) + index);
}

/// Stream tags used with derive_seed.
enum class Stream : std::uint64_t {
  realization = 1,
  occupancy = 2,
  orientation = 3,
  er_positions = 4,
  bootstrap = 5,
  synth = 6,
  projection = 7,
  configuration = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Box-Muller, no cached second variate).
  double normal();
  /// Uniform direction on the unit sphere.
  Vec3 unit_vector();
  bool bernoulli(double p);
  /// Number of failures before the first success of a Bernoulli(p) sequence.
  std::uint64_t geometric(double p);
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
};

}  // namespace ersd
