#include "countsel/negbin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "countsel/pg.hpp"

namespace countsel {

double NegBinState::nu() const { return std::exp(log_nu); }

void NegBinState::validate() const {
  if (!std::isfinite(log_nu)) throw std::invalid_argument("log_nu must be finite");
  if (!std::isfinite(psi0)) throw std::invalid_argument("psi0 must be finite");
}

Eigen::VectorXd nb_prior_omega(const Eigen::VectorXi& y, double nu, Rng& rng) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  Eigen::VectorXd omega(y.size());
  for (Index n = 0; n < y.size(); ++n) omega[n] = pg_sample({y[n] + nu, 0.0}, rng);
  return omega;
}

double nb_extra_log_factor(const Eigen::VectorXd& kappa, const Eigen::VectorXd& omega,
                           double psi0, double log_nu) {
  const double delta = psi0 - log_nu;
  return kappa.sum() * delta - 0.5 * omega.sum() * delta * delta;
}

double nb_log_likelihood(const Eigen::VectorXi& y, const Eigen::VectorXd& t, double nu) {
  const double lg_nu = std::lgamma(nu);
  double total = 0.0;
  for (Index n = 0; n < y.size(); ++n) {
    const double yn = y[n];
    total += std::lgamma(yn + nu) - lg_nu + yn * t[n] - (yn + nu) * softplus(t[n]);
  }
  return total;
}

double nb_log_acceptance(const CholeskyCache& current, const CholeskyCache& proposed,
                         double log_nu, double log_nu_prop, const Dataset& data,
                         const ModelConfig& config) {
  const double nu = std::exp(log_nu);
  const double nu_prop = std::exp(log_nu_prop);
  const double delta = config.psi0 - log_nu;
  const double delta_prop = config.psi0 - log_nu_prop;

  // Forward tilt uses β̂ at the current state with the proposed ν'; the
  // reverse tilt uses β̂ at the proposed state with the current ν.
  const Eigen::VectorXd fwd =
      (linear_predictor(current.cols, cache_beta_hat(current), data).array() + delta_prop).matrix();
  const Eigen::VectorXd rev =
      (linear_predictor(proposed.cols, cache_beta_hat(proposed), data).array() + delta).matrix();

  const Eigen::VectorXd y = data.y.cast<double>();
  const Eigen::VectorXd k = 0.5 * (y.array() - nu).matrix();
  const Eigen::VectorXd k_prop = 0.5 * (y.array() - nu_prop).matrix();
  const Eigen::VectorXd& omega = current.omega;
  const Eigen::VectorXd& omega_prop = proposed.omega;

  const double aug_rev = k.dot(rev) - 0.5 * omega.dot(rev.cwiseProduct(rev));
  const double aug_fwd = k_prop.dot(fwd) - 0.5 * omega_prop.dot(fwd.cwiseProduct(fwd));

  return (proposed.log_marginal() - current.log_marginal()) + (aug_rev - aug_fwd) +
         (nb_log_likelihood(data.y, fwd, nu_prop) - nb_log_likelihood(data.y, rev, nu));
}

double nb_log_acceptance(const InclusionState& gamma, const Eigen::VectorXd& omega,
                         double log_nu, const Eigen::VectorXd& omega_prop, double log_nu_prop,
                         const Dataset& data, const ModelConfig& config) {
  if (config.likelihood != Likelihood::negative_binomial) {
    throw std::invalid_argument("nb_log_acceptance needs the negative-binomial likelihood");
  }
  const CholeskyCache cur = build_cache(gamma, omega, data, config, std::exp(log_nu), false);
  const CholeskyCache prop =
      build_cache(gamma, omega_prop, data, config, std::exp(log_nu_prop), false);
  return nb_log_acceptance(cur, prop, log_nu, log_nu_prop, data, config);
}

OmegaMove joint_omega_nu_update(const ChainState& state, const SamplerConfig& sampler,
                                const Dataset& data, const ModelConfig& config, Rng& rng,
                                bool skip_mh) {
  if (config.likelihood != Likelihood::negative_binomial || !state.negbin) {
    throw std::invalid_argument("joint (omega, log nu) update needs the negative-binomial likelihood");
  }
  OmegaMove move;
  const double log_nu_prop = state.log_nu + sampler.nu_rw_scale * rng.normal();
  const double nu_prop = std::exp(log_nu_prop);
  const Eigen::VectorXd psi =
      linear_predictor(state.cache.cols, cache_beta_hat(state.cache), data);
  const double delta_prop = config.psi0 - log_nu_prop;

  Eigen::VectorXd omega_prop(data.rows());
  for (Index n = 0; n < data.rows(); ++n) {
    omega_prop[n] = pg_sample({data.y[n] + nu_prop, psi[n] + delta_prop}, rng);
  }
  CholeskyCache proposed = build_cache(state.gamma, omega_prop, data, config, nu_prop, false);

  move.mh_applied = !skip_mh;
  if (skip_mh) {
    move.accepted = true;
    move.alpha = 1.0;
  } else {
    const double log_alpha =
        nb_log_acceptance(state.cache, proposed, state.log_nu, log_nu_prop, data, config);
    if (!std::isfinite(log_alpha) && !(log_alpha == -INFINITY)) {
      move.numeric_failure = true;
      move.accepted = false;
      move.alpha = 0.0;
    } else {
      move.alpha = log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
      move.accepted = rng.uniform() < move.alpha;
    }
  }
  if (move.accepted) {
    move.omega = std::move(omega_prop);
    move.log_nu = log_nu_prop;
    move.cache = std::move(proposed);
  } else {
    move.omega = state.omega;
    move.log_nu = state.log_nu;
  }
  return move;
}

int sample_negbin(double mean, double nu, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  const double rate = rng.gamma(nu) * (mean / nu);
  return rng.poisson(rate);
}

double negbin_cdf(int y, double mean, double nu) {
  if (y < 0) return 0.0;
  const double log_q = std::log(mean) - std::log(nu + mean);  // success ratio μ / (ν + μ)
  double log_p = nu * (std::log(nu) - std::log(nu + mean));
  double total = std::exp(log_p);
  for (int k = 0; k < y; ++k) {
    log_p += std::log((k + nu) / (k + 1.0)) + log_q;
    total += std::exp(log_p);
  }
  return std::min(total, 1.0);
}

}  // namespace countsel
