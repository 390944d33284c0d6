#pragma once

// Tempered Gibbs sampling over (gamma, omega[, log nu]) with an auxiliary
// index i in {0..P}: i = 0 updates omega, i = j > 0 flips covariate j.
// Samples are corrected back to p(gamma, omega | D) with the importance
// weight 1 / phi(gamma, omega).

#include <Eigen/Dense>
#include <vector>

#include "countsel/glm.hpp"
#include "countsel/rng.hpp"
#include "countsel/state.hpp"

namespace countsel {

/// Covariate weighting: 1 for TGS, cond_pip + epsilon / P otherwise.
double eta(double cond_pip, Index p, Variant variant, double epsilon);

/// Unnormalized masses of the i-update, index 0 = omega arm, j = covariate j.
/// Their sum is phi.
Eigen::VectorXd i_masses(const ChainState& state, const SamplerConfig& config,
                         long* clamp_events = nullptr);

/// phi(gamma, omega) = xi + (1/P) Σ_j ½ η_j / p(gamma_j | gamma_-j, omega, D)
/// for TGS / wTGS, and xi + (1/P) Σ_j η_j for wGS. The result is never below
/// the analytic lower bound (xi + ½ for TGS, xi + ε/(2P) for wTGS).
double phi(const ChainState& state, const SamplerConfig& config);

/// Upper bound on the unnormalized weight 1 / phi for the variant.
double weight_bound(double xi, Index p, const SamplerConfig& config);

/// Draw i from the normalized masses with a single uniform.
int sample_i(const ChainState& state, const SamplerConfig& config, Rng& rng);

/// gamma with coordinate i (1-based) flipped.
InclusionState flip(const InclusionState& gamma, int i);

/// Metropolized-Gibbs acceptance for a binary variable with P(x = 1) = q.
double mg_accept(double q, int x);

/// xi_t + (f_omega - xi_t / phi_t) / sqrt(t + 1), floored at min(1e-3, xi_t / 10).
/// run_chain fixes xi after burn-in at the mean of the iterates from its second half.
double adapt_xi(double xi, double phi_value, long t, double f_omega);

/// Log MH ratio for the binomial omega move omega -> omega_prop at fixed gamma,
/// as the product of the marginal-likelihood ratio, the augmented-factor ratio
/// at β̂ and the binomial-likelihood ratio at β̂. Not clipped at zero.
double omega_log_acceptance(const InclusionState& gamma, const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& omega_prop, const Dataset& data,
                            const ModelConfig& config);
double omega_log_acceptance(const CholeskyCache& current, const CholeskyCache& proposed,
                            const Dataset& data);

/// i = 0 arm. Binomial: omega' ~ PG(C, ψ̂(gamma, omega)); negative binomial
/// delegates to the joint (omega, log nu) update.
OmegaMove omega_update(const ChainState& state, const SamplerConfig& sampler,
                       const Dataset& data, const ModelConfig& config, Rng& rng, bool skip_mh);

/// ω_0 from its prior: PG(C, 0) (binomial) or PG(Y + 1, 0) (negbin, ν_0 = 1).
Eigen::VectorXd prior_omega(const Dataset& data, const ModelConfig& config, Rng& rng);

/// Initial state: empty gamma, omega from its prior (nu_0 = 1 for negbin).
ChainState init_chain(const Dataset& data, const ModelConfig& config,
                      const SamplerConfig& sampler, Rng& rng);

/// Recompute the cached factorization and the conditionals from scratch.
void refresh(ChainState& state, const Dataset& data, const ModelConfig& config);

ChainResult run_chain(const Dataset& data, const ModelConfig& model,
                      const SamplerConfig& sampler, Rng& rng);

/// Σ_t ρ_t cond_pips_t with ρ_t the normalized weights.
Eigen::VectorXd rao_blackwell_pips(const std::vector<WeightedSample>& samples);

}  // namespace countsel
