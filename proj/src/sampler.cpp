#include "countsel/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "countsel/negbin.hpp"
#include "countsel/pg.hpp"

namespace countsel {
namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kProbCeil = 1.0 - 1e-16;

// Probability of the current value of gamma_j, from the log-odds of gamma_j = 1.
double current_prob(double log_odds, bool included, long* clamp_events) {
  const double x = included ? log_odds : -log_odds;
  double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  if (p < kProbFloor || p > kProbCeil) {
    if (clamp_events != nullptr) ++*clamp_events;
    p = std::clamp(p, kProbFloor, kProbCeil);
  }
  return p;
}

double lower_bound_phi(double xi, Index p, const SamplerConfig& config) {
  switch (config.variant) {
    case Variant::tgs:
      return xi + 0.5;
    case Variant::wtgs:
      return xi + config.epsilon / (2.0 * static_cast<double>(p));
    case Variant::wgs:
      return xi + config.epsilon / static_cast<double>(p);
  }
  return xi;
}

std::optional<double> chain_nu(const ChainState& state) { return state.nu(); }

// Factor the active set again at the current omega, keeping the column statistics.
void refactor(ChainState& state, const Dataset& data, const ModelConfig& config) {
  CholeskyCache fresh = build_cache(state.gamma, state.omega, data, config, chain_nu(state), false);
  if (state.cache.has_column_stats && state.cache.omega.size() == state.omega.size() &&
      state.cache.omega == state.omega && state.cache.nu == fresh.nu) {
    fresh.zfull = std::move(state.cache.zfull);
    fresh.xdiag = std::move(state.cache.xdiag);
    fresh.has_column_stats = true;
  } else {
    ensure_column_stats(fresh, data);
  }
  state.cache = std::move(fresh);
  state.moves_since_rebuild = 0;
}

void update_conditionals(ChainState& state, const Dataset& data, const ModelConfig& config) {
  state.cond_log_odds =
      conditional_log_odds(state.gamma, state.cache, state.omega, data, config, chain_nu(state));
  state.cond_pips = state.cond_log_odds.unaryExpr([](double x) { return logistic_clamped(x); });
}

// Coefficient draw reordered to bias followed by the active covariates ascending.
Eigen::VectorXd ordered_beta(const CholeskyCache& cache, const Eigen::VectorXd& beta,
                             const InclusionState& gamma) {
  Eigen::VectorXd out(beta.size());
  out[0] = beta[0];
  const auto& active = gamma.active();
  for (Index k = 1; k < cache.dim(); ++k) {
    const Index col = cache.cols[static_cast<std::size_t>(k)];
    const auto pos = std::lower_bound(active.begin(), active.end(), col) - active.begin();
    out[1 + pos] = beta[k];
  }
  return out;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::wgs:
      return "wgs";
    case Variant::tgs:
      return "tgs";
    case Variant::wtgs:
      return "wtgs";
  }
  return "unknown";
}

Variant parse_variant(const std::string& text) {
  if (text == "wgs") return Variant::wgs;
  if (text == "tgs") return Variant::tgs;
  if (text == "wtgs") return Variant::wtgs;
  throw std::invalid_argument("unknown sampler variant '" + text + "'");
}

void SamplerConfig::validate() const {
  if (!(iterations > burn_in) || burn_in < 0) {
    throw std::invalid_argument("need iterations > burn_in >= 0");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(f_omega > 0.0 && f_omega < 1.0)) throw std::invalid_argument("f_omega must lie in (0, 1)");
  if (xi && !(*xi > 0.0)) throw std::invalid_argument("xi must be positive");
  if (!(anneal_frac >= 0.0 && anneal_frac <= 1.0)) {
    throw std::invalid_argument("anneal_frac must lie in [0, 1]");
  }
  if (!(nu_rw_scale >= 0.0)) throw std::invalid_argument("nu_rw_scale must be non-negative");
  if (sample_thin < 0) throw std::invalid_argument("sample_thin must be non-negative");
  if (rebuild_every < 1) throw std::invalid_argument("rebuild_every must be positive");
}

std::optional<double> ChainState::nu() const {
  if (!negbin) return std::nullopt;
  return std::exp(log_nu);
}

double ChainResult::omega_accept_rate() const {
  return omega_proposals > 0 ? static_cast<double>(omega_accepted) / omega_proposals : 0.0;
}

double ChainResult::omega_mean_alpha() const {
  return omega_proposals > 0 ? omega_alpha_sum / omega_proposals : 0.0;
}

double ChainResult::i0_fraction() const {
  return retained > 0 ? static_cast<double>(i0_count) / retained : 0.0;
}

double eta(double cond_pip, Index p, Variant variant, double epsilon) {
  if (variant == Variant::tgs) return 1.0;
  return cond_pip + epsilon / static_cast<double>(p);
}

Eigen::VectorXd i_masses(const ChainState& state, const SamplerConfig& config,
                         long* clamp_events) {
  const Index p = state.p();
  const double inv_p = 1.0 / static_cast<double>(p);
  Eigen::VectorXd masses(p + 1);
  masses[0] = state.xi;
  for (Index j = 0; j < p; ++j) {
    const double e = eta(state.cond_pips[j], p, config.variant, config.epsilon);
    if (config.variant == Variant::wgs) {
      masses[j + 1] = e * inv_p;
    } else {
      const double cur = current_prob(state.cond_log_odds[j], state.gamma.contains(j), clamp_events);
      masses[j + 1] = 0.5 * e / cur * inv_p;
    }
  }
  return masses;
}

double phi(const ChainState& state, const SamplerConfig& config) {
  const Eigen::VectorXd masses = i_masses(state, config);
  double total = 0.0;
  for (Index k = 0; k < masses.size(); ++k) total += masses[k];
  return std::max(total, lower_bound_phi(state.xi, state.p(), config));
}

double weight_bound(double xi, Index p, const SamplerConfig& config) {
  return 1.0 / lower_bound_phi(xi, p, config);
}

namespace {

int draw_index(const Eigen::VectorXd& masses, double total, Rng& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  const Index last = masses.size() - 1;
  for (Index k = 0; k < last; ++k) {
    acc += masses[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(last);
}

double sum_in_order(const Eigen::VectorXd& v) {
  double total = 0.0;
  for (Index k = 0; k < v.size(); ++k) total += v[k];
  return total;
}

}  // namespace

int sample_i(const ChainState& state, const SamplerConfig& config, Rng& rng) {
  const Eigen::VectorXd masses = i_masses(state, config);
  return draw_index(masses, sum_in_order(masses), rng);
}

InclusionState flip(const InclusionState& gamma, int i) {
  if (i < 1 || i > gamma.p()) {
    throw std::out_of_range("flip index " + std::to_string(i) + " outside 1.." +
                            std::to_string(gamma.p()));
  }
  InclusionState out = gamma;
  out.toggle(i - 1);
  return out;
}

double mg_accept(double q, int x) {
  if (x == 0) return q >= 1.0 - q ? 1.0 : q / (1.0 - q);
  return 1.0 - q >= q ? 1.0 : (1.0 - q) / q;
}

double adapt_xi(double xi, double phi_value, long t, double f_omega) {
  const double next = xi + (f_omega - xi / phi_value) / std::sqrt(static_cast<double>(t) + 1.0);
  return std::max(next, std::min(1e-3, 0.1 * xi));
}

double omega_log_acceptance(const CholeskyCache& current, const CholeskyCache& proposed,
                            const Dataset& data) {
  const Eigen::VectorXd psi = linear_predictor(current.cols, cache_beta_hat(current), data);
  const Eigen::VectorXd psi_prop = linear_predictor(proposed.cols, cache_beta_hat(proposed), data);
  const Eigen::VectorXd& k = current.kappa_vec;
  const Eigen::VectorXd& omega = current.omega;
  const Eigen::VectorXd& omega_prop = proposed.omega;

  const double aug = (k.dot(psi_prop) - 0.5 * omega.dot(psi_prop.cwiseProduct(psi_prop))) -
                     (k.dot(psi) - 0.5 * omega_prop.dot(psi.cwiseProduct(psi)));
  double lik = 0.0;
  for (Index n = 0; n < data.rows(); ++n) {
    const double yn = data.y[n];
    const double cn = data.c[n];
    lik += (yn * psi[n] - cn * softplus(psi[n])) - (yn * psi_prop[n] - cn * softplus(psi_prop[n]));
  }
  return (proposed.log_marginal() - current.log_marginal()) + aug + lik;
}

double omega_log_acceptance(const InclusionState& gamma, const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& omega_prop, const Dataset& data,
                            const ModelConfig& config) {
  if (config.likelihood != Likelihood::binomial) {
    throw std::invalid_argument("omega_log_acceptance needs the binomial likelihood");
  }
  const CholeskyCache cur = build_cache(gamma, omega, data, config, std::nullopt, false);
  const CholeskyCache prop = build_cache(gamma, omega_prop, data, config, std::nullopt, false);
  return omega_log_acceptance(cur, prop, data);
}

OmegaMove omega_update(const ChainState& state, const SamplerConfig& sampler,
                       const Dataset& data, const ModelConfig& config, Rng& rng, bool skip_mh) {
  if (config.likelihood == Likelihood::negative_binomial) {
    return joint_omega_nu_update(state, sampler, data, config, rng, skip_mh);
  }
  OmegaMove move;
  const Eigen::VectorXd psi = linear_predictor(state.cache.cols, cache_beta_hat(state.cache), data);
  Eigen::VectorXd omega_prop(data.rows());
  for (Index n = 0; n < data.rows(); ++n) {
    omega_prop[n] = pg_sample({static_cast<double>(data.c[n]), psi[n]}, rng);
  }
  CholeskyCache proposed = build_cache(state.gamma, omega_prop, data, config, std::nullopt, false);

  move.mh_applied = !skip_mh;
  if (skip_mh) {
    move.accepted = true;
    move.alpha = 1.0;
  } else {
    const double log_alpha = omega_log_acceptance(state.cache, proposed, data);
    if (std::isnan(log_alpha) || log_alpha == INFINITY) {
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
    move.cache = std::move(proposed);
  } else {
    move.omega = state.omega;
  }
  move.log_nu = state.log_nu;
  return move;
}

Eigen::VectorXd prior_omega(const Dataset& data, const ModelConfig& config, Rng& rng) {
  if (config.likelihood == Likelihood::negative_binomial) return nb_prior_omega(data.y, 1.0, rng);
  Eigen::VectorXd omega(data.rows());
  for (Index n = 0; n < data.rows(); ++n) {
    omega[n] = pg_sample({static_cast<double>(data.c[n]), 0.0}, rng);
  }
  return omega;
}

ChainState init_chain(const Dataset& data, const ModelConfig& config,
                      const SamplerConfig& sampler, Rng& rng) {
  ChainState state;
  state.gamma = InclusionState(data.cols());
  state.negbin = config.likelihood == Likelihood::negative_binomial;
  state.log_nu = 0.0;
  state.omega = prior_omega(data, config, rng);
  state.xi = sampler.freeze_omega ? 0.0 : sampler.xi.value_or(5.0);
  refresh(state, data, config);
  return state;
}

void refresh(ChainState& state, const Dataset& data, const ModelConfig& config) {
  state.cache = build_cache(state.gamma, state.omega, data, config, chain_nu(state), true);
  state.moves_since_rebuild = 0;
  update_conditionals(state, data, config);
}

Eigen::VectorXd rao_blackwell_pips(const std::vector<WeightedSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no retained samples");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(samples.front().cond_pips.size());
  double total = 0.0;
  for (const auto& s : samples) {
    acc += s.rho_tilde * s.cond_pips;
    total += s.rho_tilde;
  }
  return (acc / total).cwiseMax(0.0).cwiseMin(1.0);
}

ChainResult run_chain(const Dataset& data, const ModelConfig& model,
                      const SamplerConfig& sampler, Rng& rng) {
  sampler.validate();
  model.validate();
  data.validate(model.likelihood);
  const auto start = std::chrono::steady_clock::now();

  const Index p = data.cols();
  ChainResult result;
  ChainState state = init_chain(data, model, sampler, rng);
  result.omega_initial = state.omega;

  const bool adapt = !sampler.freeze_omega && !sampler.xi.has_value();
  const long anneal_until =
      static_cast<long>(std::floor(sampler.anneal_frac * static_cast<double>(sampler.burn_in)));

  Eigen::VectorXd pip_acc = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd beta_w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd beta_s1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd beta_s2 = Eigen::VectorXd::Zero(p);
  double nu_s1 = 0.0;
  double nu_s2 = 0.0;
  long clamps = 0;
  const long average_from = sampler.burn_in / 2;
  double xi_sum = 0.0;
  long xi_count = 0;

  Eigen::VectorXd masses = i_masses(state, sampler, &clamps);
  for (long t = 1; t <= sampler.iterations; ++t) {
    const bool retained = t > sampler.burn_in;
    const int i = draw_index(masses, sum_in_order(masses), rng);

    if (i > 0) {
      const Index j = i - 1;
      bool move = true;
      if (sampler.variant == Variant::wgs) {
        const double a = mg_accept(state.cond_pips[j], state.gamma.contains(j) ? 1 : 0);
        move = a >= 1.0 || rng.uniform() < a;
      }
      if (move) {
        if (state.gamma.contains(j)) {
          state.gamma.erase(j);
          refactor(state, data, model);
        } else {
          state.gamma.insert(j);
          cache_add(state.cache, j, data, model);
          if (++state.moves_since_rebuild >= sampler.rebuild_every) refactor(state, data, model);
        }
        update_conditionals(state, data, model);
      }
    } else {
      const bool skip_mh = t <= anneal_until;
      OmegaMove mv = omega_update(state, sampler, data, model, rng, skip_mh);
      if (retained && mv.mh_applied) {
        ++result.omega_proposals;
        result.omega_alpha_sum += mv.alpha;
        if (mv.accepted) ++result.omega_accepted;
      }
      if (mv.numeric_failure) ++result.numeric_failures;
      if (mv.accepted) {
        state.omega = std::move(mv.omega);
        state.log_nu = mv.log_nu;
        state.cache = std::move(mv.cache);
        ensure_column_stats(state.cache, data);
        state.moves_since_rebuild = 0;
        update_conditionals(state, data, model);
      }
    }
    state.iteration = t;

    masses = i_masses(state, sampler, &clamps);
    const double covariate_mass = sum_in_order(masses) - masses[0];
    const double phi_t = std::max(state.xi + covariate_mass, lower_bound_phi(state.xi, p, sampler));
    const double rho = 1.0 / phi_t;

    if (retained) {
      ++result.retained;
      if (i == 0) ++result.i0_count;
      result.weight_sum += rho;
      pip_acc += rho * state.cond_pips;
      result.max_rho_tilde = std::max(result.max_rho_tilde, rho);

      const Eigen::VectorXd beta =
          ordered_beta(state.cache, cache_sample_beta(state.cache, rng), state.gamma);
      const auto& active = state.gamma.active();
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double b = beta[static_cast<Index>(k) + 1];
        beta_w[active[k]] += rho;
        beta_s1[active[k]] += rho * b;
        beta_s2[active[k]] += rho * b * b;
      }
      if (state.negbin) {
        const double nu = std::exp(state.log_nu);
        nu_s1 += rho * nu;
        nu_s2 += rho * nu * nu;
      }
      if (sampler.sample_thin > 0 && (result.retained - 1) % sampler.sample_thin == 0) {
        WeightedSample s;
        s.t = t;
        s.rho_tilde = rho;
        s.cond_pips = state.cond_pips;
        s.gamma = active;
        s.log_nu = state.log_nu;
        s.i_drawn = i;
        s.beta = beta;
        result.samples.push_back(std::move(s));
      }
    }
    if (sampler.record_trace) {
      result.trace.push_back({t, rho, state.gamma.size(), i, state.log_nu});
    }

    if (adapt && t <= sampler.burn_in) {
      // ξ_{t+1} from φ(γ_t, ω_t) at ξ_t; only the ξ entry of the masses changes.
      state.xi = adapt_xi(state.xi, phi_t, t, sampler.f_omega);
      if (t > average_from) {
        xi_sum += state.xi;
        ++xi_count;
      }
      // Freeze ξ at the average of the late iterates rather than the last, noisier one.
      if (t == sampler.burn_in) state.xi = xi_sum / static_cast<double>(xi_count);
      masses[0] = state.xi;
    }
  }

  result.pips = (pip_acc / result.weight_sum).cwiseMax(0.0).cwiseMin(1.0);
  result.beta_cond_mean = Eigen::VectorXd::Constant(p, std::nan(""));
  result.beta_cond_std = Eigen::VectorXd::Constant(p, std::nan(""));
  for (Index j = 0; j < p; ++j) {
    if (beta_w[j] <= 0.0) continue;
    const double mean = beta_s1[j] / beta_w[j];
    result.beta_cond_mean[j] = mean;
    result.beta_cond_std[j] = std::sqrt(std::max(beta_s2[j] / beta_w[j] - mean * mean, 0.0));
  }
  if (state.negbin) {
    const double mean = nu_s1 / result.weight_sum;
    result.nu_mean = mean;
    result.nu_std = std::sqrt(std::max(nu_s2 / result.weight_sum - mean * mean, 0.0));
  }
  result.clamp_events = clamps;
  result.xi_final = state.xi;
  result.gamma_final = state.gamma;
  result.omega_final = state.omega;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace countsel
