#include <doctest.h>

#include <cmath>
#include <random>

#include "countsel/negbin.hpp"
#include "countsel/pg.hpp"
#include "countsel/sampler.hpp"
#include "countsel/simulate.hpp"
#include "oracles.hpp"

using namespace countsel;

namespace {

ModelConfig nb_config(double psi0) {
  ModelConfig m;
  m.likelihood = Likelihood::negative_binomial;
  m.tau = 0.6;
  m.tau_bias = 0.6;
  m.h = 0.2;
  m.psi0 = psi0;
  return m;
}

ChainState nb_state(const Dataset& d, const ModelConfig& m, const InclusionState& g,
                    const Eigen::VectorXd& w, double log_nu) {
  ChainState s;
  s.gamma = g;
  s.omega = w;
  s.negbin = true;
  s.log_nu = log_nu;
  refresh(s, d, m);
  return s;
}

}  // namespace

TEST_CASE("prior omega draws") {
  Rng rng(1);
  Eigen::VectorXi y = Eigen::VectorXi::Zero(20000);
  const Eigen::VectorXd w = nb_prior_omega(y, 1.0, rng);
  CHECK(std::abs(w.mean() - 0.25) < 3.5 * std::sqrt(pg_variance({1.0, 0.0}) / 20000.0));
  y.setConstant(3);
  const Eigen::VectorXd w3 = nb_prior_omega(y, 1.5, rng);
  CHECK(std::abs(w3.mean() - 4.5 / 4.0) < 3.5 * std::sqrt(pg_variance({4.5, 0.0}) / 20000.0));
  Rng a(9);
  Rng b(9);
  CHECK(nb_prior_omega(y, 0.7, a) == nb_prior_omega(y, 0.7, b));
  CHECK_THROWS_AS(nb_prior_omega(y, 0.0, a), std::invalid_argument);
}

TEST_CASE("extra log factor") {
  const Eigen::VectorXd k = Eigen::Vector2d(0.3, -1.1);
  const Eigen::VectorXd w = Eigen::Vector2d(0.4, 2.0);
  CHECK(nb_extra_log_factor(k, w, 0.7, 0.7) == 0.0);
  CHECK(nb_extra_log_factor(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones(), 2.0, 0.0) ==
        doctest::Approx(-4.0));
  const double delta = 1.3 - std::log(2.0);
  CHECK(nb_extra_log_factor(k, w, 1.3, std::log(2.0)) ==
        doctest::Approx(k.sum() * delta - 0.5 * w.sum() * delta * delta));
}

TEST_CASE("joint acceptance ratio against the dense oracle") {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> norm(0.0, 0.4);
  for (int rep = 0; rep < 6; ++rep) {
    const Dataset d = oracle::random_dataset(4, 3, eng, 1, Likelihood::negative_binomial);
    const ModelConfig m = nb_config(0.5 + 0.1 * rep);
    const std::vector<Index> active{static_cast<Index>(rep % 3)};
    const InclusionState g(3, active);
    const Eigen::VectorXd w = oracle::random_omega(4, eng);
    const Eigen::VectorXd w2 = oracle::random_omega(4, eng);
    const double lnu = norm(eng);
    const double lnu2 = lnu + norm(eng);
    const double lib = nb_log_acceptance(g, w, lnu, w2, lnu2, d, m);
    const double ref =
        oracle::log_acceptance(d, active, w, w2, m, std::exp(lnu), std::exp(lnu2));
    CHECK(std::abs(lib - ref) < 1e-8);
  }
}

TEST_CASE("identity proposal has ratio one") {
  std::mt19937_64 eng(8);
  const Dataset d = oracle::random_dataset(7, 4, eng, 1, Likelihood::negative_binomial);
  const ModelConfig m = nb_config(1.1);
  const InclusionState g(4, {0, 3});
  const Eigen::VectorXd w = oracle::random_omega(7, eng);
  CHECK(std::abs(nb_log_acceptance(g, w, 0.4, w, 0.4, d, m)) < 1e-12);
}

TEST_CASE("zero random-walk scale keeps nu fixed and alpha in (0, 1]") {
  std::mt19937_64 eng(12);
  const Dataset d = oracle::random_dataset(30, 5, eng, 1, Likelihood::negative_binomial);
  const ModelConfig m = nb_config(std::log(d.y.cast<double>().mean()));
  Rng rng(3);
  const ChainState s = nb_state(d, m, InclusionState(5, {2}), nb_prior_omega(d.y, 1.0, rng), 0.2);
  SamplerConfig c;
  c.nu_rw_scale = 0.0;
  for (int i = 0; i < 30; ++i) {
    const OmegaMove mv = joint_omega_nu_update(s, c, d, m, rng, false);
    CHECK(mv.log_nu == 0.2);
    CHECK(mv.alpha > 0.0);
    CHECK(mv.alpha <= 1.0);
    CHECK_FALSE(mv.numeric_failure);
  }
  const OmegaMove skipped = joint_omega_nu_update(s, c, d, m, rng, true);
  CHECK(skipped.accepted);
  CHECK_FALSE(skipped.mh_applied);

  ModelConfig b = m;
  b.likelihood = Likelihood::binomial;
  CHECK_THROWS_AS(joint_omega_nu_update(s, c, d, b, rng, false), std::invalid_argument);
}

TEST_CASE("generative mean and the Poisson limit") {
  Rng rng(21);
  const double psi0 = 1.4;
  const Dataset d = simulate_negbin(40000, 2, {}, {}, 2.0, psi0, 5);
  const Eigen::VectorXd y = d.y.cast<double>();
  const double mu = std::exp(psi0);
  const double var = mu + mu * mu / 2.0;
  CHECK(std::abs(y.mean() - mu) < 3.5 * std::sqrt(var / y.size()));
  const double sample_var = (y.array() - y.mean()).square().sum() / (y.size() - 1);
  CHECK(sample_var == doctest::Approx(var).epsilon(0.05));

  const Dataset p = simulate_negbin(40000, 1, {}, {}, 1e6, psi0, 6);
  const Eigen::VectorXd yp = p.y.cast<double>();
  const double vp = (yp.array() - yp.mean()).square().sum() / (yp.size() - 1);
  CHECK(vp / yp.mean() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("negative-binomial cdf") {
  const double mean = 3.2;
  const double nu = 0.8;
  const double q = mean / (mean + nu);
  double cdf = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double lp = std::lgamma(k + nu) - std::lgamma(nu) - std::lgamma(k + 1.0) +
                      nu * std::log1p(-q) + k * std::log(q);
    cdf += std::exp(lp);
    CHECK(negbin_cdf(k, mean, nu) == doctest::Approx(cdf).epsilon(1e-12));
  }
  CHECK(negbin_cdf(-1, mean, nu) == 0.0);
  CHECK(negbin_cdf(100000, mean, nu) == doctest::Approx(1.0));
}

TEST_CASE("log-likelihood agrees with the pmf") {
  const Eigen::VectorXi y = Eigen::Vector3i(0, 4, 9);
  const Eigen::VectorXd t = Eigen::Vector3d(-0.3, 0.8, 1.9);
  const double nu = 1.7;
  double direct = 0.0;
  for (int n = 0; n < 3; ++n) {
    const double mean = std::exp(t[n]) * nu;  // logit t = log(mean / nu)
    const double lp = std::log(negbin_cdf(y[n], mean, nu) - negbin_cdf(y[n] - 1, mean, nu));
    direct += lp + std::lgamma(y[n] + 1.0);
  }
  CHECK(nb_log_likelihood(y, t, nu) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("short chain recovers the dispersion") {
  const Dataset d = simulate_negbin(400, 10, {0, 3}, {0.7, -0.6}, 1.0, 1.0, 77);
  const ModelConfig m = ModelConfig::defaults(d, Likelihood::negative_binomial);
  SamplerConfig c;
  c.iterations = 8000;
  c.burn_in = 2000;
  Rng rng(2);
  const ChainResult r = run_chain(d, m, c, rng);
  REQUIRE(r.nu_mean.has_value());
  CHECK(*r.nu_mean > 0.7);
  CHECK(*r.nu_mean < 1.4);
  CHECK(r.pips[0] > 0.9);
  CHECK(r.pips[3] > 0.9);
  CHECK(r.omega_accept_rate() > 0.2);
  CHECK(r.numeric_failures == 0);
}
