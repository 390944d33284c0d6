#pragma once

// Negative-binomial extension: NegBin(Y | mean exp(ψ + ψ0), dispersion ν)
// augmented with ω_n ~ PG(Y_n + ν, 0), flat prior on log ν, and a joint
// (ω, log ν) Metropolis-Hastings update.

#include <Eigen/Dense>

#include "countsel/glm.hpp"
#include "countsel/rng.hpp"
#include "countsel/state.hpp"

namespace countsel {

struct NegBinState {
  double log_nu = 0.0;
  double psi0 = 0.0;

  double nu() const;
  void validate() const;
};

/// ω_n ~ PG(Y_n + ν, 0).
Eigen::VectorXd nb_prior_omega(const Eigen::VectorXi& y, double nu, Rng& rng);

/// κ·(ψ0 - log ν) - ½ Σ ω_n (ψ0 - log ν)²
double nb_extra_log_factor(const Eigen::VectorXd& kappa, const Eigen::VectorXd& omega,
                           double psi0, double log_nu);

/// Σ_n [log Γ(Y_n + ν) - log Γ(ν) + Y_n t_n - (Y_n + ν) log(1 + e^{t_n})]:
/// the negative-binomial log pmf at linear predictor t, without log Γ(Y_n + 1).
double nb_log_likelihood(const Eigen::VectorXi& y, const Eigen::VectorXd& t, double nu);

/// Log MH ratio for moving (ω, log ν) -> (ω', log ν') under the proposal
/// log ν' = log ν + N(0, s²), ω' ~ PG(Y + ν', ψ̂(γ, ω, ν) + ψ0 - log ν').
/// Not clipped at zero. See docs/negbin_acceptance.md for the derivation.
double nb_log_acceptance(const InclusionState& gamma, const Eigen::VectorXd& omega,
                         double log_nu, const Eigen::VectorXd& omega_prop, double log_nu_prop,
                         const Dataset& data, const ModelConfig& config);

/// Same ratio from already-built factorizations at the two states.
double nb_log_acceptance(const CholeskyCache& current, const CholeskyCache& proposed,
                         double log_nu, double log_nu_prop, const Dataset& data,
                         const ModelConfig& config);

/// Joint (ω, log ν) update for a chain in the i = 0 arm.
OmegaMove joint_omega_nu_update(const ChainState& state, const SamplerConfig& sampler,
                                const Dataset& data, const ModelConfig& config, Rng& rng,
                                bool skip_mh);

/// Draws Y ~ NegBin(mean, nu) through the Gamma-Poisson mixture.
int sample_negbin(double mean, double nu, Rng& rng);

/// P(Y <= y) for NegBin(mean, nu); 0 for y < 0.
double negbin_cdf(int y, double mean, double nu);

}  // namespace countsel
