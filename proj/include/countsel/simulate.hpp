#pragma once

// Synthetic datasets: the correlated-covariates binomial scenario and a
// negative-binomial regression with a few active covariates.

#include <cstdint>
#include <vector>

#include "countsel/glm.hpp"

namespace countsel {

struct CorrelatedData {
  Dataset data;
  Eigen::VectorXd z;  // latent logits shared by covariates 1 and 2
};

/// X_{n,p} ~ N(0, 1) for p >= 3, z_n ~ N(0, 1), X_{n,1}, X_{n,2} ~ N(z_n, 1e-4)
/// (variance), C_n = 10, Y_n ~ Binomial(10, logistic(z_n)). Requires P >= 3.
CorrelatedData simulate_correlated(Index n, Index p, std::uint64_t seed);

/// X_{n,p} ~ N(0, 1); ψ_n = Σ_k betas_k X_{n, active_k}; Y_n ~ NegBin with
/// mean exp(ψ_n + psi0) and dispersion nu. `active` is 0-based. C is all ones.
Dataset simulate_negbin(Index n, Index p, const std::vector<Index>& active,
                        const std::vector<double>& betas, double nu, double psi0,
                        std::uint64_t seed);

/// Covariate names x1..xP.
std::vector<std::string> default_names(Index p);

}  // namespace countsel
