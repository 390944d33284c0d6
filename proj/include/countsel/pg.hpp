#pragma once

#include "countsel/rng.hpp"

namespace countsel {

/// Parameters of the Polya-Gamma distribution PG(b, c).
///
/// PG(b, c) and PG(b, -c) are the same law, so the tilt is stored as given
/// and folded to |c| wherever it is used.
struct PgParams {
  double b = 1.0;
  double c = 0.0;

  /// Throws std::invalid_argument unless b > 0 and c is finite.
  void validate() const;
};

/// Draw from PG(b, c).
///
/// Sampling regimes:
///   - b integer and b <= 32: sum of b exact alternating-series (Devroye)
///     draws of PG(1, c). Exact.
///   - b non-integer and b < 32: floor(b) exact draws plus a PG(frac(b), c)
///     draw from the infinite sum-of-gammas representation truncated at 200
///     terms, with the remainder replaced by a Gamma variable matching its
///     mean and variance. Mean and variance are exact; higher moments of the
///     remainder (itself O(1e-3) of the total mean) are approximated.
///   - b > 32: normal approximation with the exact mean and variance. Only
///     used for large counts, where the sum of many iid PG(1, c) terms is
///     close to Gaussian; MH steps that consume these draws are therefore
///     only approximately corrected in this regime.
double pg_sample(const PgParams& params, Rng& rng);

/// E[PG(b, c)] = b / (2c) tanh(c / 2), with the c -> 0 limit b / 4.
double pg_mean(const PgParams& params);

/// Var[PG(b, c)] = b (sinh c - c) / (4 c^3 cosh^2(c / 2)), limit b / 24.
double pg_variance(const PgParams& params);

/// Log of the augmented likelihood factor exp(kappa psi - omega psi^2 / 2).
inline double pg_factor_log(double kappa, double omega, double psi) {
  return kappa * psi - 0.5 * omega * psi * psi;
}

/// log cosh(x) without overflow.
double log_cosh(double x);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace countsel
