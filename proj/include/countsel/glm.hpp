#pragma once

// Data model, priors and the conditional marginal likelihood
// log p(Y | X, C, gamma, omega) with coefficients integrated out.
//
// Internally covariates are 0-based (0..P-1) and the always-included bias is
// the augmented column P of X̄ = [X, 1]. User-facing surfaces (CLI, sampler
// index i) are 1-based.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "countsel/rng.hpp"

namespace countsel {

using Index = Eigen::Index;

enum class Likelihood { binomial, negative_binomial };

std::string to_string(Likelihood likelihood);
Likelihood parse_likelihood(const std::string& text);

struct Dataset {
  Eigen::MatrixXd x;  // N x P covariates
  Eigen::VectorXi y;  // responses
  Eigen::VectorXi c;  // binomial total counts (all ones = logistic); unused for negbin
  std::vector<std::string> names;

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }

  /// Throws std::invalid_argument on shape mismatches, non-finite covariates,
  /// negative responses or (binomial) Y > C.
  void validate(Likelihood likelihood) const;

  /// Rows selected by `rows`, same covariates.
  Dataset subset(const std::vector<Index>& rows) const;
};

struct ModelConfig {
  Likelihood likelihood = Likelihood::binomial;
  double tau = 0.01;       // coefficient prior precision
  double tau_bias = 0.01;  // bias prior precision
  double h = 0.5;          // prior inclusion probability
  double psi0 = 0.0;       // negative-binomial offset

  /// tau = tau_bias = 0.01, h = 5/P (capped below 1), psi0 = log(mean(Y)).
  static ModelConfig defaults(const Dataset& data, Likelihood likelihood);
  void validate() const;
};

/// Sparse inclusion vector gamma: the set of included covariates.
class InclusionState {
 public:
  InclusionState() = default;
  explicit InclusionState(Index p) : mask_(static_cast<std::size_t>(p), false) {}
  InclusionState(Index p, const std::vector<Index>& active);

  Index p() const { return static_cast<Index>(mask_.size()); }
  Index size() const { return static_cast<Index>(active_.size()); }
  bool contains(Index j) const { return mask_.at(static_cast<std::size_t>(j)); }
  /// Included covariates, ascending, 0-based.
  const std::vector<Index>& active() const { return active_; }

  void insert(Index j);
  void erase(Index j);
  void toggle(Index j) { contains(j) ? erase(j) : insert(j); }

  bool operator==(const InclusionState&) const = default;

 private:
  void check(Index j) const;
  std::vector<bool> mask_;
  std::vector<Index> active_;
};

/// Cholesky factorization of X̄_I^T Ω X̄_I + Λ_I for I = active ∪ {bias},
/// together with the per-omega column statistics used by the conditionals.
struct CholeskyCache {
  std::vector<Index> cols;     // factor order; cols[0] is the bias column P
  Eigen::MatrixXd chol;        // lower triangular, positive diagonal
  Eigen::VectorXd ztilde;      // chol^{-1} Z_I
  double logdet = 0.0;         // log det(X̄_I^T Ω X̄_I + Λ_I)
  double log_prior_det = 0.0;  // log det(Λ_I)
  double extra_log_factor = 0.0;  // negbin offset term, 0 for binomial

  Eigen::VectorXd omega;
  std::optional<double> nu;
  Eigen::VectorXd kappa_vec;  // effective kappa: κ (binomial) or κ - ω(ψ0 - log ν)
  Eigen::VectorXd zfull;      // Z_j = sum_n X̄_nj kappa_vec_n, length P + 1
  Eigen::VectorXd xdiag;      // sum_n ω_n X̄_nj^2, length P + 1
  bool has_column_stats = false;

  Index dim() const { return static_cast<Index>(cols.size()); }
  /// Cached log marginal likelihood, same convention as mll().
  double log_marginal() const;
};

/// κ_n = Y_n - C_n / 2 (binomial) or (Y_n - ν) / 2 (negative binomial).
/// Throws std::invalid_argument when nu is given for binomial or missing for
/// negative binomial.
Eigen::VectorXd kappa(const Dataset& data, const ModelConfig& config,
                      std::optional<double> nu);

/// log p(Y | X, C, gamma, omega) up to a gamma-independent constant, computed
/// from scratch.
double mll(const InclusionState& state, const Eigen::VectorXd& omega,
           const Dataset& data, const ModelConfig& config, std::optional<double> nu);

/// Factor the active set from scratch. Column statistics (zfull, xdiag) are
/// O(NP) and only needed by the conditionals; skip them with
/// `column_stats = false` for throwaway evaluations.
CholeskyCache build_cache(const InclusionState& state, const Eigen::VectorXd& omega,
                          const Dataset& data, const ModelConfig& config,
                          std::optional<double> nu, bool column_stats = true);

/// Fill zfull / xdiag for a cache built without them.
void ensure_column_stats(CholeskyCache& cache, const Dataset& data);

/// Append covariate j to the factorization (rank-1 extension).
void cache_add(CholeskyCache& cache, Index j, const Dataset& data,
               const ModelConfig& config);

/// Log-odds of p(gamma_j = 1 | gamma_-j, omega, D) for every covariate:
/// mll difference plus log(h / (1 - h)). Inactive columns use the rank-1
/// formulae; active columns refactor the reduced set directly.
Eigen::VectorXd conditional_log_odds(const InclusionState& state, const CholeskyCache& cache,
                                     const Eigen::VectorXd& omega, const Dataset& data,
                                     const ModelConfig& config, std::optional<double> nu);

Eigen::VectorXd conditional_pips(const InclusionState& state, const CholeskyCache& cache,
                                 const Eigen::VectorXd& omega, const Dataset& data,
                                 const ModelConfig& config, std::optional<double> nu);

/// Mean of p(beta | gamma, omega, D); entry 0 is the bias, then active
/// covariates in ascending order.
Eigen::VectorXd beta_hat(const InclusionState& state, const Eigen::VectorXd& omega,
                         const Dataset& data, const ModelConfig& config,
                         std::optional<double> nu);

/// ψ̂_n = β̂_0 + β̂_γ · X_nγ (offset not included).
Eigen::VectorXd psi_hat(const Eigen::VectorXd& beta, const InclusionState& state,
                        const Dataset& data);

/// Draw from the Gaussian conditional posterior of beta; same layout as
/// beta_hat.
Eigen::VectorXd sample_beta(const InclusionState& state, const Eigen::VectorXd& omega,
                            const Dataset& data, const ModelConfig& config,
                            std::optional<double> nu, Rng& rng);

// Cache-level variants; vectors are aligned with cache.cols.
Eigen::VectorXd cache_beta_hat(const CholeskyCache& cache);
Eigen::VectorXd cache_sample_beta(const CholeskyCache& cache, Rng& rng);
Eigen::VectorXd linear_predictor(const std::vector<Index>& cols, const Eigen::VectorXd& beta,
                                 const Dataset& data);

/// logistic(x) with x clamped to [-700, 700].
double logistic_clamped(double x);

/// Threads used by the conditional loop; COUNTSEL_THREADS, default 1.
int inner_threads();

}  // namespace countsel
