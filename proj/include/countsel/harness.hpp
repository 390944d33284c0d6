#pragma once

// Multi-chain runs, run summaries and predictive diagnostics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "countsel/glm.hpp"
#include "countsel/rng.hpp"
#include "countsel/state.hpp"

namespace countsel {

/// Chains run one after another; chain k uses the stream seed + 10007 k.
std::vector<ChainResult> run_chains(const Dataset& data, const ModelConfig& model,
                                    const SamplerConfig& sampler, int chains);

struct RunSummary {
  std::vector<std::string> names;
  Eigen::VectorXd pips;
  Eigen::VectorXd beta_cond_mean;
  Eigen::VectorXd beta_cond_std;
  double omega_accept_rate = 0.0;
  double omega_mean_alpha = 0.0;
  std::optional<double> nu_posterior_mean;
  std::optional<double> nu_posterior_std;
  double xi_final = 0.0;
  double i0_fraction = 0.0;
  double wall_time = 0.0;
  double max_rho_tilde = 0.0;
  double weight_bound = 0.0;
  long numeric_failures = 0;
  long clamp_events = 0;
  int chains = 1;
  std::uint64_t seed = 0;
  ModelConfig model;
  SamplerConfig sampler;
  /// PIPs of each chain, for across-chain spread.
  std::vector<Eigen::VectorXd> chain_pips;
  std::vector<double> chain_xi;
};

/// Averages chain-level estimates with equal weight per chain.
RunSummary summarize(const std::vector<ChainResult>& results, const Dataset& data,
                     const ModelConfig& model, const SamplerConfig& sampler);

nlohmann::json to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& j);

/// Flattens per-chain samples, rescaling weights so they sum to 1 overall
/// with every chain carrying equal total weight.
std::vector<WeightedSample> pool_chains(const std::vector<std::vector<WeightedSample>>& chains);

/// P(Y <= y) under Binomial(trials, prob); 0 for y < 0.
double binomial_cdf(int y, int trials, double prob);

/// Randomized PIT of each row of `test`: u ~ Uniform(F(y - 1), F(y)) with F
/// the weighted mixture of per-sample predictive CDFs. Sample weights are
/// normalized internally. Each sample supplies gamma, a coefficient draw
/// (bias first) and log nu (negative binomial).
std::vector<double> compute_pit(const std::vector<WeightedSample>& samples, const Dataset& test,
                                const ModelConfig& model, Rng& rng);

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// Uniform(0, 1).
double ks_uniform_statistic(std::vector<double> values);

/// 5% critical value of the one-sample KS test for n points
/// (Stephens' approximation 1.358 / (sqrt n + 0.12 + 0.11 / sqrt n)).
double ks_critical_5pct(std::size_t n);

struct WeightDiagnostics {
  double min_rho = 0.0;
  double max_rho = 0.0;
  double mean_rho = 0.0;
  double ess_fraction = 0.0;  // (Σρ)² / (n Σρ²)
  std::vector<long> histogram;  // counts over [0, bound] in equal bins
  long bound_violations = 0;
};

WeightDiagnostics weight_diagnostics(const std::vector<double>& rho, double bound, int bins = 20);

}  // namespace countsel
