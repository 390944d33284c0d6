#pragma once

// Exhaustive enumeration of p(gamma | omega, D) over all 2^P inclusion vectors.

#include <optional>
#include <vector>

#include "countsel/glm.hpp"

namespace countsel {

inline constexpr Index kMaxEnumerationP = 15;

struct EnumerationResult {
  Eigen::VectorXd pips;
  /// Normalized log p(gamma | omega, D); entry `mask` has bit j set when
  /// covariate j (0-based) is included.
  std::vector<double> log_probs;
};

/// Throws std::invalid_argument for P > 15.
EnumerationResult enumerate_posterior(const Dataset& data, const Eigen::VectorXd& omega,
                                      const ModelConfig& config, std::optional<double> nu);

/// Inclusion state for an enumeration mask.
InclusionState state_from_mask(Index p, unsigned mask);

}  // namespace countsel
