#include "countsel/rng.hpp"

#include <cmath>

namespace countsel {

Rng Rng::for_chain(std::uint64_t seed, std::uint64_t chain_id) {
  return Rng(seed + kChainSeedStride * chain_id);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::exponential() { return -std::log1p(-uniform()); }

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

int Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<int> dist(mean);
  return dist(engine_);
}

int Rng::binomial(int trials, double prob) {
  std::binomial_distribution<int> dist(trials, prob);
  return dist(engine_);
}

}  // namespace countsel
