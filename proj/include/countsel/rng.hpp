#pragma once

#include <cstdint>
#include <random>

namespace countsel {

/// Seeded random stream. Every sampler entry point takes one of these by
/// reference; nothing in the library holds global random state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for chain `chain_id` of a multi-chain run:
  /// seed + 10007 * chain_id.
  static Rng for_chain(std::uint64_t seed, std::uint64_t chain_id);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  double exponential();
  /// Gamma(shape, 1).
  double gamma(double shape);
  int poisson(double mean);
  int binomial(int trials, double prob);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline constexpr std::uint64_t kChainSeedStride = 10007;

}  // namespace countsel
