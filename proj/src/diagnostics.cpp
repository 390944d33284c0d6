#include "countsel/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "countsel/negbin.hpp"
#include "countsel/sampler.hpp"

namespace countsel {
namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index k = 0; k < v.size(); ++k) {
    if (std::isfinite(v[k])) {
      a.push_back(v[k]);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    v[static_cast<Index>(k)] = a[k].is_null() ? std::nan("") : a[k].get<double>();
  }
  return v;
}

}  // namespace

std::vector<ChainResult> run_chains(const Dataset& data, const ModelConfig& model,
                                    const SamplerConfig& sampler, int chains) {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  std::vector<ChainResult> out;
  out.reserve(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    Rng rng = Rng::for_chain(sampler.seed, static_cast<std::uint64_t>(c));
    out.push_back(run_chain(data, model, sampler, rng));
  }
  return out;
}

RunSummary summarize(const std::vector<ChainResult>& results, const Dataset& data,
                     const ModelConfig& model, const SamplerConfig& sampler) {
  if (results.empty()) throw std::invalid_argument("no chain results");
  const Index p = data.cols();
  const double k = static_cast<double>(results.size());
  RunSummary s;
  s.names = data.names;
  s.model = model;
  s.sampler = sampler;
  s.seed = sampler.seed;
  s.chains = static_cast<int>(results.size());
  s.pips = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(p);
  long proposals = 0;
  long accepted = 0;
  double alpha_sum = 0.0;
  long i0 = 0;
  long retained = 0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  for (const auto& r : results) {
    s.pips += r.pips / k;
    s.chain_pips.push_back(r.pips);
    s.chain_xi.push_back(r.xi_final);
    for (Index j = 0; j < p; ++j) {
      if (!std::isfinite(r.beta_cond_mean[j])) continue;
      seen[j] += 1.0;
      m1[j] += r.beta_cond_mean[j];
      m2[j] += r.beta_cond_std[j] * r.beta_cond_std[j] + r.beta_cond_mean[j] * r.beta_cond_mean[j];
    }
    proposals += r.omega_proposals;
    accepted += r.omega_accepted;
    alpha_sum += r.omega_alpha_sum;
    i0 += r.i0_count;
    retained += r.retained;
    s.xi_final += r.xi_final / k;
    s.wall_time += r.wall_time;
    s.max_rho_tilde = std::max(s.max_rho_tilde, r.max_rho_tilde);
    s.weight_bound = std::max(s.weight_bound, weight_bound(r.xi_final, p, sampler));
    s.numeric_failures += r.numeric_failures;
    s.clamp_events += r.clamp_events;
    if (r.nu_mean) {
      nu1 += *r.nu_mean / k;
      nu2 += (*r.nu_std * *r.nu_std + *r.nu_mean * *r.nu_mean) / k;
    }
  }
  s.beta_cond_mean = Eigen::VectorXd::Constant(p, std::nan(""));
  s.beta_cond_std = Eigen::VectorXd::Constant(p, std::nan(""));
  for (Index j = 0; j < p; ++j) {
    if (seen[j] == 0.0) continue;
    const double mean = m1[j] / seen[j];
    s.beta_cond_mean[j] = mean;
    s.beta_cond_std[j] = std::sqrt(std::max(m2[j] / seen[j] - mean * mean, 0.0));
  }
  s.omega_accept_rate = proposals > 0 ? static_cast<double>(accepted) / proposals : 0.0;
  s.omega_mean_alpha = proposals > 0 ? alpha_sum / proposals : 0.0;
  s.i0_fraction = retained > 0 ? static_cast<double>(i0) / retained : 0.0;
  if (model.likelihood == Likelihood::negative_binomial) {
    s.nu_posterior_mean = nu1;
    s.nu_posterior_std = std::sqrt(std::max(nu2 - nu1 * nu1, 0.0));
  }
  return s;
}

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["names"] = s.names;
  j["pips"] = vec_json(s.pips);
  j["beta_cond_mean"] = vec_json(s.beta_cond_mean);
  j["beta_cond_std"] = vec_json(s.beta_cond_std);
  j["omega_accept_rate"] = s.omega_accept_rate;
  j["omega_mean_alpha"] = s.omega_mean_alpha;
  j["nu_posterior_mean"] = s.nu_posterior_mean ? nlohmann::json(*s.nu_posterior_mean) : nullptr;
  j["nu_posterior_std"] = s.nu_posterior_std ? nlohmann::json(*s.nu_posterior_std) : nullptr;
  j["xi_final"] = s.xi_final;
  j["i0_fraction"] = s.i0_fraction;
  j["wall_time"] = s.wall_time;
  j["max_rho_tilde"] = s.max_rho_tilde;
  j["weight_bound"] = s.weight_bound;
  j["numeric_failures"] = s.numeric_failures;
  j["clamp_events"] = s.clamp_events;
  j["chains"] = s.chains;
  j["seed"] = s.seed;
  j["chain_xi"] = s.chain_xi;
  nlohmann::json cp = nlohmann::json::array();
  for (const auto& v : s.chain_pips) cp.push_back(vec_json(v));
  j["chain_pips"] = cp;
  j["model"] = {{"likelihood", to_string(s.model.likelihood)},
                {"tau", s.model.tau},
                {"tau_bias", s.model.tau_bias},
                {"h", s.model.h},
                {"psi0", s.model.psi0}};
  j["sampler"] = {{"variant", to_string(s.sampler.variant)},
                  {"iterations", s.sampler.iterations},
                  {"burn_in", s.sampler.burn_in},
                  {"xi", s.sampler.xi ? nlohmann::json(*s.sampler.xi) : nullptr},
                  {"epsilon", s.sampler.epsilon},
                  {"f_omega", s.sampler.f_omega},
                  {"seed", s.sampler.seed},
                  {"anneal_frac", s.sampler.anneal_frac},
                  {"nu_rw_scale", s.sampler.nu_rw_scale},
                  {"freeze_omega", s.sampler.freeze_omega}};
  return j;
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.pips = vec_from_json(j.at("pips"));
  s.beta_cond_mean = vec_from_json(j.at("beta_cond_mean"));
  s.beta_cond_std = vec_from_json(j.at("beta_cond_std"));
  s.omega_accept_rate = j.at("omega_accept_rate").get<double>();
  s.omega_mean_alpha = j.value("omega_mean_alpha", 0.0);
  if (!j.at("nu_posterior_mean").is_null()) s.nu_posterior_mean = j["nu_posterior_mean"].get<double>();
  if (!j.at("nu_posterior_std").is_null()) s.nu_posterior_std = j["nu_posterior_std"].get<double>();
  s.xi_final = j.at("xi_final").get<double>();
  s.i0_fraction = j.at("i0_fraction").get<double>();
  s.wall_time = j.at("wall_time").get<double>();
  s.max_rho_tilde = j.value("max_rho_tilde", 0.0);
  s.weight_bound = j.value("weight_bound", 0.0);
  s.numeric_failures = j.value("numeric_failures", 0L);
  s.clamp_events = j.value("clamp_events", 0L);
  s.chains = j.at("chains").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.chain_xi = j.value("chain_xi", std::vector<double>{});
  for (const auto& cp : j.value("chain_pips", nlohmann::json::array())) {
    s.chain_pips.push_back(vec_from_json(cp));
  }
  const auto& m = j.at("model");
  s.model.likelihood = parse_likelihood(m.at("likelihood").get<std::string>());
  s.model.tau = m.at("tau").get<double>();
  s.model.tau_bias = m.at("tau_bias").get<double>();
  s.model.h = m.at("h").get<double>();
  s.model.psi0 = m.at("psi0").get<double>();
  const auto& sm = j.at("sampler");
  s.sampler.variant = parse_variant(sm.at("variant").get<std::string>());
  s.sampler.iterations = sm.at("iterations").get<long>();
  s.sampler.burn_in = sm.at("burn_in").get<long>();
  if (!sm.at("xi").is_null()) s.sampler.xi = sm["xi"].get<double>();
  s.sampler.epsilon = sm.at("epsilon").get<double>();
  s.sampler.f_omega = sm.at("f_omega").get<double>();
  s.sampler.seed = sm.at("seed").get<std::uint64_t>();
  s.sampler.anneal_frac = sm.at("anneal_frac").get<double>();
  s.sampler.nu_rw_scale = sm.at("nu_rw_scale").get<double>();
  s.sampler.freeze_omega = sm.at("freeze_omega").get<bool>();
  return s;
}

std::vector<WeightedSample> pool_chains(const std::vector<std::vector<WeightedSample>>& chains) {
  std::vector<WeightedSample> out;
  std::size_t used = 0;
  for (const auto& c : chains) used += c.empty() ? 0 : 1;
  if (used == 0) return out;
  for (const auto& c : chains) {
    double total = 0.0;
    for (const auto& s : c) total += s.rho_tilde;
    for (const auto& s : c) {
      WeightedSample w = s;
      w.rho_tilde = s.rho_tilde / total / static_cast<double>(used);
      out.push_back(std::move(w));
    }
  }
  return out;
}

double binomial_cdf(int y, int trials, double prob) {
  if (y < 0) return 0.0;
  if (y >= trials || prob <= 0.0) return 1.0;
  if (prob >= 1.0) return 0.0;
  const double lp = std::log(prob);
  const double lq = std::log1p(-prob);
  double total = 0.0;
  for (int k = 0; k <= y; ++k) {
    const double log_choose =
        std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
    total += std::exp(log_choose + k * lp + (trials - k) * lq);
  }
  return std::min(total, 1.0);
}

std::vector<double> compute_pit(const std::vector<WeightedSample>& samples, const Dataset& test,
                                const ModelConfig& model, Rng& rng) {
  if (test.rows() == 0) throw std::invalid_argument("empty test set");
  if (samples.empty()) throw std::invalid_argument("no weighted samples");
  double total = 0.0;
  for (const auto& s : samples) total += s.rho_tilde;

  const Index n = test.rows();
  Eigen::VectorXd f_hi = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f_lo = Eigen::VectorXd::Zero(n);
  for (const auto& s : samples) {
    const double w = s.rho_tilde / total;
    Eigen::VectorXd psi = Eigen::VectorXd::Constant(n, s.beta[0]);
    for (std::size_t k = 0; k < s.gamma.size(); ++k) {
      psi.noalias() += s.beta[static_cast<Index>(k) + 1] * test.x.col(s.gamma[k]);
    }
    const double nu = std::exp(s.log_nu);
    for (Index i = 0; i < n; ++i) {
      const int y = test.y[i];
      if (model.likelihood == Likelihood::negative_binomial) {
        const double mean = std::exp(psi[i] + model.psi0);
        f_hi[i] += w * negbin_cdf(y, mean, nu);
        f_lo[i] += w * negbin_cdf(y - 1, mean, nu);
      } else {
        const double prob = logistic_clamped(psi[i]);
        f_hi[i] += w * binomial_cdf(y, test.c[i], prob);
        f_lo[i] += w * binomial_cdf(y - 1, test.c[i], prob);
      }
    }
  }
  std::vector<double> pit(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double lo = std::min(f_lo[i], f_hi[i]);
    pit[static_cast<std::size_t>(i)] = std::clamp(lo + rng.uniform() * (f_hi[i] - lo), 0.0, 1.0);
  }
  return pit;
}

double ks_uniform_statistic(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("KS statistic of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = values[i];
    d = std::max({d, (i + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_5pct(std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return 1.358 / (rn + 0.12 + 0.11 / rn);
}

WeightDiagnostics weight_diagnostics(const std::vector<double>& rho, double bound, int bins) {
  WeightDiagnostics d;
  d.histogram.assign(static_cast<std::size_t>(std::max(bins, 1)), 0);
  if (rho.empty()) return d;
  d.min_rho = *std::min_element(rho.begin(), rho.end());
  d.max_rho = *std::max_element(rho.begin(), rho.end());
  double s1 = 0.0;
  double s2 = 0.0;
  for (double r : rho) {
    s1 += r;
    s2 += r * r;
    if (r > bound) ++d.bound_violations;
    const double pos = bound > 0.0 ? r / bound : 0.0;
    const auto bin = std::min<std::size_t>(d.histogram.size() - 1,
                                           static_cast<std::size_t>(std::max(pos, 0.0) * d.histogram.size()));
    ++d.histogram[bin];
  }
  d.mean_rho = s1 / static_cast<double>(rho.size());
  d.ess_fraction = s1 * s1 / (static_cast<double>(rho.size()) * s2);
  return d;
}

}  // namespace countsel
