#include "countsel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countsel {

InclusionState state_from_mask(Index p, unsigned mask) {
  InclusionState s(p);
  for (Index j = 0; j < p; ++j) {
    if (mask & (1u << j)) s.insert(j);
  }
  return s;
}

EnumerationResult enumerate_posterior(const Dataset& data, const Eigen::VectorXd& omega,
                                      const ModelConfig& config, std::optional<double> nu) {
  const Index p = data.cols();
  if (p > kMaxEnumerationP) {
    throw std::invalid_argument("enumeration needs P <= " + std::to_string(kMaxEnumerationP) +
                                ", got " + std::to_string(p));
  }
  const unsigned count = 1u << p;
  const double log_h = std::log(config.h);
  const double log_1mh = std::log1p(-config.h);

  EnumerationResult out;
  out.log_probs.resize(count);
  double top = -INFINITY;
  for (unsigned mask = 0; mask < count; ++mask) {
    const InclusionState s = state_from_mask(p, mask);
    const double size = static_cast<double>(s.size());
    const double lp = mll(s, omega, data, config, nu) + size * log_h +
                      (static_cast<double>(p) - size) * log_1mh;
    out.log_probs[mask] = lp;
    top = std::max(top, lp);
  }
  double total = 0.0;
  for (double lp : out.log_probs) total += std::exp(lp - top);
  const double log_z = top + std::log(total);

  out.pips = Eigen::VectorXd::Zero(p);
  for (unsigned mask = 0; mask < count; ++mask) {
    out.log_probs[mask] -= log_z;
    const double prob = std::exp(out.log_probs[mask]);
    for (Index j = 0; j < p; ++j) {
      if (mask & (1u << j)) out.pips[j] += prob;
    }
  }
  return out;
}

}  // namespace countsel
