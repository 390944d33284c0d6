#include "countsel/glm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace countsel {
namespace {

constexpr Index kColumnBlock = 256;

std::string column_label(Index j, Index p) {
  return j == p ? std::string("bias") : "covariate " + std::to_string(j + 1);
}

double column_prior_precision(Index j, Index p, const ModelConfig& config) {
  return j == p ? config.tau_bias : config.tau;
}

// X̄ restricted to `cols`; column P is the all-ones bias.
Eigen::MatrixXd gather(const Dataset& data, const std::vector<Index>& cols) {
  const Index p = data.cols();
  Eigen::MatrixXd out(data.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] == p) {
      out.col(static_cast<Index>(k)).setOnes();
    } else {
      out.col(static_cast<Index>(k)) = data.x.col(cols[k]);
    }
  }
  return out;
}

double offset_shift(const ModelConfig& config, std::optional<double> nu) {
  return config.likelihood == Likelihood::negative_binomial ? config.psi0 - std::log(*nu) : 0.0;
}

// Lower Cholesky factor of a small dense SPD matrix; names the failing column.
Eigen::MatrixXd factorize(const Eigen::MatrixXd& gram, const std::vector<Index>& cols, Index p) {
  const Index m = gram.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    double pivot = gram(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw std::runtime_error("Cholesky factorization failed (non-positive pivot) at " +
                               column_label(cols[static_cast<std::size_t>(j)], p));
    }
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (Index i = j + 1; i < m; ++i) {
      l(i, j) = (gram(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / diag;
    }
  }
  return l;
}

struct Factor {
  Eigen::MatrixXd chol;
  Eigen::VectorXd ztilde;
  double logdet = 0.0;
  double log_prior_det = 0.0;

  double core_mll() const { return 0.5 * ztilde.squaredNorm() - 0.5 * logdet + 0.5 * log_prior_det; }
};

Factor factor_from_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& z,
                        const std::vector<Index>& cols, Index p, const ModelConfig& config) {
  Factor f;
  f.chol = factorize(gram, cols, p);
  f.ztilde = f.chol.triangularView<Eigen::Lower>().solve(z);
  f.logdet = 2.0 * f.chol.diagonal().array().log().sum();
  for (Index j : cols) f.log_prior_det += std::log(column_prior_precision(j, p, config));
  return f;
}

Factor factor_columns(const std::vector<Index>& cols, const Eigen::VectorXd& omega,
                      const Eigen::VectorXd& kappa_eff, const Dataset& data,
                      const ModelConfig& config) {
  const Index p = data.cols();
  const Eigen::MatrixXd xbar = gather(data, cols);
  Eigen::MatrixXd gram = xbar.transpose() * omega.asDiagonal() * xbar;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    gram(static_cast<Index>(k), static_cast<Index>(k)) += column_prior_precision(cols[k], p, config);
  }
  const Eigen::VectorXd z = xbar.transpose() * kappa_eff;
  return factor_from_gram(gram, z, cols, p, config);
}

std::vector<Index> index_set(const InclusionState& state, Index p) {
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(state.size()) + 1);
  cols.push_back(p);
  cols.insert(cols.end(), state.active().begin(), state.active().end());
  return cols;
}

void check_omega(const Eigen::VectorXd& omega, const Dataset& data) {
  if (omega.size() != data.rows()) {
    throw std::invalid_argument("omega has length " + std::to_string(omega.size()) +
                                ", expected " + std::to_string(data.rows()));
  }
  for (Index n = 0; n < omega.size(); ++n) {
    if (!(omega[n] > 0.0) || !std::isfinite(omega[n])) {
      throw std::invalid_argument("omega entry " + std::to_string(n + 1) +
                                  " is not a positive finite number");
    }
  }
}

void check_state(const InclusionState& state, const Dataset& data) {
  if (state.p() != data.cols()) {
    throw std::invalid_argument("inclusion state has P = " + std::to_string(state.p()) +
                                " but dataset has " + std::to_string(data.cols()) +
                                " covariates");
  }
}

Eigen::VectorXd effective_kappa(const Dataset& data, const ModelConfig& config,
                                const Eigen::VectorXd& omega, std::optional<double> nu) {
  Eigen::VectorXd k = kappa(data, config, nu);
  if (config.likelihood == Likelihood::negative_binomial) {
    k -= offset_shift(config, nu) * omega;
  }
  return k;
}

double extra_factor(const Dataset& data, const ModelConfig& config,
                    const Eigen::VectorXd& omega, std::optional<double> nu) {
  if (config.likelihood != Likelihood::negative_binomial) return 0.0;
  const double delta = offset_shift(config, nu);
  return kappa(data, config, nu).sum() * delta - 0.5 * omega.sum() * delta * delta;
}

}  // namespace

std::string to_string(Likelihood likelihood) {
  return likelihood == Likelihood::binomial ? "binomial" : "negbin";
}

Likelihood parse_likelihood(const std::string& text) {
  if (text == "binomial") return Likelihood::binomial;
  if (text == "negbin" || text == "negative-binomial") return Likelihood::negative_binomial;
  throw std::invalid_argument("unknown likelihood '" + text + "'");
}

void Dataset::validate(Likelihood likelihood) const {
  const Index n = rows();
  const Index p = cols();
  if (n < 1 || p < 1) throw std::invalid_argument("dataset needs N >= 1 and P >= 1");
  if (y.size() != n) throw std::invalid_argument("response length does not match N");
  if (static_cast<Index>(names.size()) != p) {
    throw std::invalid_argument("covariate name count does not match P");
  }
  if (!x.allFinite()) throw std::invalid_argument("covariate matrix has non-finite entries");
  if (likelihood == Likelihood::binomial && c.size() != n) {
    throw std::invalid_argument("total-count length does not match N");
  }
  for (Index i = 0; i < n; ++i) {
    if (y[i] < 0) {
      throw std::invalid_argument("negative response in row " + std::to_string(i + 1));
    }
    if (likelihood == Likelihood::binomial) {
      if (c[i] < 1) {
        throw std::invalid_argument("non-positive total count in row " + std::to_string(i + 1));
      }
      if (y[i] > c[i]) {
        throw std::invalid_argument("response exceeds total count in row " +
                                    std::to_string(i + 1));
      }
    }
  }
}

Dataset Dataset::subset(const std::vector<Index>& rows_wanted) const {
  Dataset out;
  const Index m = static_cast<Index>(rows_wanted.size());
  out.x.resize(m, cols());
  out.y.resize(m);
  out.c.resize(c.size() == 0 ? 0 : m);
  for (Index i = 0; i < m; ++i) {
    const Index r = rows_wanted[static_cast<std::size_t>(i)];
    out.x.row(i) = x.row(r);
    out.y[i] = y[r];
    if (c.size() != 0) out.c[i] = c[r];
  }
  out.names = names;
  return out;
}

ModelConfig ModelConfig::defaults(const Dataset& data, Likelihood likelihood) {
  ModelConfig config;
  config.likelihood = likelihood;
  config.tau = 0.01;
  config.tau_bias = 0.01;
  config.h = std::min(5.0 / static_cast<double>(data.cols()), 0.5);
  if (likelihood == Likelihood::negative_binomial && data.rows() > 0) {
    const double mean_y = data.y.cast<double>().mean();
    config.psi0 = mean_y > 0.0 ? std::log(mean_y) : 0.0;
  }
  return config;
}

void ModelConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (!(tau_bias > 0.0) || !std::isfinite(tau_bias)) {
    throw std::invalid_argument("tau_bias must be positive");
  }
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("h must lie in (0, 1)");
  if (!std::isfinite(psi0)) throw std::invalid_argument("psi0 must be finite");
}

InclusionState::InclusionState(Index p, const std::vector<Index>& active) : InclusionState(p) {
  for (Index j : active) insert(j);
}

void InclusionState::check(Index j) const {
  if (j < 0 || j >= p()) {
    throw std::out_of_range("covariate index " + std::to_string(j + 1) + " outside 1.." +
                            std::to_string(p()));
  }
}

void InclusionState::insert(Index j) {
  check(j);
  if (mask_[static_cast<std::size_t>(j)]) return;
  mask_[static_cast<std::size_t>(j)] = true;
  active_.insert(std::lower_bound(active_.begin(), active_.end(), j), j);
}

void InclusionState::erase(Index j) {
  check(j);
  if (!mask_[static_cast<std::size_t>(j)]) return;
  mask_[static_cast<std::size_t>(j)] = false;
  active_.erase(std::lower_bound(active_.begin(), active_.end(), j));
}

double CholeskyCache::log_marginal() const {
  return 0.5 * ztilde.squaredNorm() - 0.5 * logdet + 0.5 * log_prior_det + extra_log_factor;
}

Eigen::VectorXd kappa(const Dataset& data, const ModelConfig& config, std::optional<double> nu) {
  const Eigen::VectorXd y = data.y.cast<double>();
  if (config.likelihood == Likelihood::binomial) {
    if (nu) throw std::invalid_argument("nu must not be given for the binomial likelihood");
    return y - 0.5 * data.c.cast<double>();
  }
  if (!nu) throw std::invalid_argument("nu is required for the negative-binomial likelihood");
  if (!(*nu > 0.0)) throw std::invalid_argument("nu must be positive");
  return 0.5 * (y.array() - *nu).matrix();
}

double mll(const InclusionState& state, const Eigen::VectorXd& omega, const Dataset& data,
           const ModelConfig& config, std::optional<double> nu) {
  check_state(state, data);
  check_omega(omega, data);
  const Eigen::VectorXd k = effective_kappa(data, config, omega, nu);
  const Factor f = factor_columns(index_set(state, data.cols()), omega, k, data, config);
  return f.core_mll() + extra_factor(data, config, omega, nu);
}

CholeskyCache build_cache(const InclusionState& state, const Eigen::VectorXd& omega,
                          const Dataset& data, const ModelConfig& config,
                          std::optional<double> nu, bool column_stats) {
  check_state(state, data);
  check_omega(omega, data);
  CholeskyCache cache;
  cache.cols = index_set(state, data.cols());
  cache.omega = omega;
  cache.nu = nu;
  cache.kappa_vec = effective_kappa(data, config, omega, nu);
  cache.extra_log_factor = extra_factor(data, config, omega, nu);
  Factor f = factor_columns(cache.cols, omega, cache.kappa_vec, data, config);
  cache.chol = std::move(f.chol);
  cache.ztilde = std::move(f.ztilde);
  cache.logdet = f.logdet;
  cache.log_prior_det = f.log_prior_det;
  if (column_stats) ensure_column_stats(cache, data);
  return cache;
}

void ensure_column_stats(CholeskyCache& cache, const Dataset& data) {
  if (cache.has_column_stats) return;
  const Index p = data.cols();
  cache.zfull.resize(p + 1);
  cache.xdiag.resize(p + 1);
  cache.zfull.head(p).noalias() = data.x.transpose() * cache.kappa_vec;
  cache.zfull[p] = cache.kappa_vec.sum();
  for (Index j = 0; j < p; ++j) {
    cache.xdiag[j] = (data.x.col(j).array().square() * cache.omega.array()).sum();
  }
  cache.xdiag[p] = cache.omega.sum();
  cache.has_column_stats = true;
}

void cache_add(CholeskyCache& cache, Index j, const Dataset& data, const ModelConfig& config) {
  const Index p = data.cols();
  if (j < 0 || j >= p) throw std::out_of_range("covariate index out of range");
  if (std::find(cache.cols.begin(), cache.cols.end(), j) != cache.cols.end()) {
    throw std::logic_error(column_label(j, p) + " is already in the factorization");
  }
  const Index m = cache.dim();
  const Eigen::MatrixXd xbar = gather(data, cache.cols);
  const Eigen::VectorXd wx = cache.omega.cwiseProduct(data.x.col(j));
  const Eigen::VectorXd cross = xbar.transpose() * wx;
  const Eigen::VectorXd l = cache.chol.triangularView<Eigen::Lower>().solve(cross);
  const double tau_j = column_prior_precision(j, p, config);
  const double self = data.x.col(j).dot(wx) + tau_j;
  const double pivot = self - l.squaredNorm();
  if (!(pivot > 0.0)) {
    throw std::runtime_error("Cholesky factorization failed (non-positive pivot) at " +
                             column_label(j, p));
  }
  const double diag = std::sqrt(pivot);
  const double z_j = cache.has_column_stats ? cache.zfull[j] : data.x.col(j).dot(cache.kappa_vec);

  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(m + 1, m + 1);
  grown.topLeftCorner(m, m) = cache.chol;
  grown.row(m).head(m) = l.transpose();
  grown(m, m) = diag;
  cache.chol = std::move(grown);

  Eigen::VectorXd zt(m + 1);
  zt.head(m) = cache.ztilde;
  zt[m] = (z_j - l.dot(cache.ztilde)) / diag;
  cache.ztilde = std::move(zt);

  cache.logdet += std::log(pivot);
  cache.log_prior_det += std::log(tau_j);
  cache.cols.push_back(j);
}

Eigen::VectorXd conditional_log_odds(const InclusionState& state, const CholeskyCache& cache,
                                     const Eigen::VectorXd& omega, const Dataset& data,
                                     const ModelConfig& config, std::optional<double> nu) {
  check_state(state, data);
  const Index p = data.cols();
  {
    std::vector<Index> cached(cache.cols.begin() + 1, cache.cols.end());
    std::sort(cached.begin(), cached.end());
    if (cached != state.active() || !cache.has_column_stats || cache.nu != nu ||
        cache.omega.size() != omega.size() || cache.omega != omega) {
      throw std::logic_error("stale Cholesky cache: inputs changed since it was built");
    }
  }
  const Index m = cache.dim();
  const double prior_log_odds = std::log(config.h) - std::log1p(-config.h);
  Eigen::VectorXd out(p);

  // Rows of mt are L^{-1} X̄_I^T Ω, so (mt * X)_{:,k} = L^{-1} X̄_I^T Ω x_k.
  const Eigen::MatrixXd xbar = gather(data, cache.cols);
  const Eigen::MatrixXd weighted = omega.asDiagonal() * xbar;
  const Eigen::MatrixXd mt = cache.chol.triangularView<Eigen::Lower>().solve(weighted.transpose());
  const double log_tau = std::log(config.tau);

  const Index blocks = (p + kColumnBlock - 1) / kColumnBlock;
  const int threads = inner_threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (Index b = 0; b < blocks; ++b) {
    const Index start = b * kColumnBlock;
    const Index width = std::min(kColumnBlock, p - start);
    const Eigen::MatrixXd proj = mt * data.x.middleCols(start, width);
    for (Index k = 0; k < width; ++k) {
      const Index j = start + k;
      if (state.contains(j)) continue;
      const auto a = proj.col(k);
      const double schur = cache.xdiag[j] + config.tau - a.squaredNorm();
      if (!(schur > 0.0)) {
        out[j] = -INFINITY;
        continue;
      }
      const double w = cache.zfull[j] - a.dot(cache.ztilde);
      out[j] = 0.5 * w * w / schur - 0.5 * std::log(schur) + 0.5 * log_tau + prior_log_odds;
    }
  }
  for (Index j = 0; j < p; ++j) {
    if (!state.contains(j) && out[j] == -INFINITY) {
      throw std::runtime_error("Cholesky factorization failed (non-positive pivot) at " +
                               column_label(j, p));
    }
  }

  if (state.size() > 0) {
    // Active columns: refactor I \ {j} from the Gram matrix, no downdates.
    const double full_core = 0.5 * cache.ztilde.squaredNorm() - 0.5 * cache.logdet +
                             0.5 * cache.log_prior_det;
    Eigen::MatrixXd gram = xbar.transpose() * weighted;
    Eigen::VectorXd z(m);
    for (Index k = 0; k < m; ++k) {
      const Index col = cache.cols[static_cast<std::size_t>(k)];
      gram(k, k) += column_prior_precision(col, p, config);
      z[k] = cache.zfull[col];
    }
    for (Index drop = 1; drop < m; ++drop) {
      std::vector<Index> keep;
      std::vector<Index> keep_cols;
      for (Index k = 0; k < m; ++k) {
        if (k == drop) continue;
        keep.push_back(k);
        keep_cols.push_back(cache.cols[static_cast<std::size_t>(k)]);
      }
      const Factor f = factor_from_gram(gram(keep, keep), z(keep), keep_cols, p, config);
      out[cache.cols[static_cast<std::size_t>(drop)]] = full_core - f.core_mll() + prior_log_odds;
    }
  }
  return out;
}

Eigen::VectorXd conditional_pips(const InclusionState& state, const CholeskyCache& cache,
                                 const Eigen::VectorXd& omega, const Dataset& data,
                                 const ModelConfig& config, std::optional<double> nu) {
  Eigen::VectorXd lo = conditional_log_odds(state, cache, omega, data, config, nu);
  return lo.unaryExpr([](double x) { return logistic_clamped(x); });
}

Eigen::VectorXd cache_beta_hat(const CholeskyCache& cache) {
  return cache.chol.transpose().triangularView<Eigen::Upper>().solve(cache.ztilde);
}

Eigen::VectorXd cache_sample_beta(const CholeskyCache& cache, Rng& rng) {
  Eigen::VectorXd noise(cache.dim());
  for (Index k = 0; k < noise.size(); ++k) noise[k] = rng.normal();
  return cache.chol.transpose().triangularView<Eigen::Upper>().solve(cache.ztilde + noise);
}

Eigen::VectorXd linear_predictor(const std::vector<Index>& cols, const Eigen::VectorXd& beta,
                                 const Dataset& data) {
  const Index p = data.cols();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(data.rows());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double b = beta[static_cast<Index>(k)];
    if (cols[k] == p) {
      psi.array() += b;
    } else {
      psi.noalias() += b * data.x.col(cols[k]);
    }
  }
  return psi;
}

Eigen::VectorXd beta_hat(const InclusionState& state, const Eigen::VectorXd& omega,
                         const Dataset& data, const ModelConfig& config,
                         std::optional<double> nu) {
  return cache_beta_hat(build_cache(state, omega, data, config, nu, false));
}

Eigen::VectorXd psi_hat(const Eigen::VectorXd& beta, const InclusionState& state,
                        const Dataset& data) {
  check_state(state, data);
  if (beta.size() != state.size() + 1) {
    throw std::invalid_argument("beta must have |gamma| + 1 entries");
  }
  return linear_predictor(index_set(state, data.cols()), beta, data);
}

Eigen::VectorXd sample_beta(const InclusionState& state, const Eigen::VectorXd& omega,
                            const Dataset& data, const ModelConfig& config,
                            std::optional<double> nu, Rng& rng) {
  return cache_sample_beta(build_cache(state, omega, data, config, nu, false), rng);
}

double logistic_clamped(double x) {
  const double t = std::clamp(x, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(-t));
}

int inner_threads() {
  static const int threads = [] {
    const char* env = std::getenv("COUNTSEL_THREADS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
  }();
  return threads;
}

}  // namespace countsel
