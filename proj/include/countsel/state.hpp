#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "countsel/glm.hpp"

namespace countsel {

/// wGS: Metropolized-Gibbs flips with eta weighting, no tempering.
/// TGS: tempered, deterministic flips, eta = 1.
/// wTGS: tempered, deterministic flips, eta = conditional PIP + epsilon / P.
enum class Variant { wgs, tgs, wtgs };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& text);

struct SamplerConfig {
  Variant variant = Variant::wtgs;
  long iterations = 11000;  // T, including burn-in
  long burn_in = 1000;      // T_burn
  std::optional<double> xi;  // adapted from 5 during burn-in when absent
  double epsilon = 5.0;
  double f_omega = 0.25;
  std::uint64_t seed = 0;
  double anneal_frac = 0.5;  // leading fraction of burn-in with ω-updates always accepted
  double nu_rw_scale = 0.03;

  /// Disable ω (and ν) updates and force ξ = 0: the chain then targets
  /// p(gamma | omega_0, D) for the initial omega draw.
  bool freeze_omega = false;
  bool record_trace = false;
  /// Keep every k-th retained iteration as a WeightedSample (0 keeps none).
  long sample_thin = 0;
  /// Refactor the active set from scratch after this many gamma moves.
  long rebuild_every = 1000;

  void validate() const;
};

/// Full Markov chain state. cond_log_odds / cond_pips always describe
/// p(gamma_j = 1 | gamma_-j, omega, D) at the current (gamma, omega, nu).
struct ChainState {
  InclusionState gamma;
  Eigen::VectorXd omega;
  bool negbin = false;
  double log_nu = 0.0;
  double xi = 5.0;
  long iteration = 0;
  CholeskyCache cache;
  Eigen::VectorXd cond_log_odds;
  Eigen::VectorXd cond_pips;
  long moves_since_rebuild = 0;

  std::optional<double> nu() const;
  Index p() const { return gamma.p(); }
};

/// Outcome of an ω (or joint ω, log ν) MH step.
struct OmegaMove {
  Eigen::VectorXd omega;
  double log_nu = 0.0;
  bool accepted = false;
  double alpha = 0.0;  // min(1, ratio); 1 when the MH step is skipped
  bool mh_applied = true;
  bool numeric_failure = false;  // non-finite ratio, rejected
  CholeskyCache cache;           // factorization at the returned state when accepted
};

struct WeightedSample {
  long t = 0;
  double rho_tilde = 0.0;
  Eigen::VectorXd cond_pips;
  std::vector<Index> gamma;  // 0-based active covariates, ascending
  double log_nu = 0.0;
  int i_drawn = 0;
  Eigen::VectorXd beta;  // draw from p(beta | gamma, omega, D): bias, then gamma order
};

struct TraceRow {
  long t = 0;
  double rho_tilde = 0.0;
  Index gamma_size = 0;
  int i_drawn = 0;
  double log_nu = 0.0;
};

struct ChainResult {
  Eigen::VectorXd pips;  // Rao-Blackwellized estimate
  double weight_sum = 0.0;
  long retained = 0;
  std::vector<WeightedSample> samples;
  std::vector<TraceRow> trace;

  // Coefficient summaries conditioned on inclusion (importance weighted);
  // NaN for covariates never included after burn-in.
  Eigen::VectorXd beta_cond_mean;
  Eigen::VectorXd beta_cond_std;

  long omega_proposals = 0;  // post-burn-in MH ω proposals
  long omega_accepted = 0;
  double omega_alpha_sum = 0.0;
  long numeric_failures = 0;
  long clamp_events = 0;
  long i0_count = 0;  // retained iterations with i = 0

  double xi_final = 0.0;
  double max_rho_tilde = 0.0;
  std::optional<double> nu_mean;
  std::optional<double> nu_std;

  InclusionState gamma_final;
  Eigen::VectorXd omega_initial;
  Eigen::VectorXd omega_final;
  double wall_time = 0.0;

  double omega_accept_rate() const;
  double omega_mean_alpha() const;
  double i0_fraction() const;
};

}  // namespace countsel
