#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "countsel/oracle.hpp"
#include "countsel/sampler.hpp"
#include "countsel/simulate.hpp"
#include "oracles.hpp"

using namespace countsel;

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

// State with gamma empty and the given probabilities of the current value 0.
ChainState frozen_state(const std::vector<double>& current_probs, double xi) {
  const Index p = static_cast<Index>(current_probs.size());
  ChainState s;
  s.gamma = InclusionState(p);
  s.xi = xi;
  s.cond_pips.resize(p);
  s.cond_log_odds.resize(p);
  for (Index j = 0; j < p; ++j) {
    s.cond_pips[j] = 1.0 - current_probs[static_cast<std::size_t>(j)];
    s.cond_log_odds[j] = logit(s.cond_pips[j]);
  }
  return s;
}

SamplerConfig tgs_config() {
  SamplerConfig c;
  c.variant = Variant::tgs;
  return c;
}

struct Small {
  Dataset data;
  ModelConfig model;
};

Small small_problem(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  Small s;
  s.data = oracle::random_dataset(n, p, eng, 4);
  // Give two covariates real signal so the posterior is not flat.
  for (Index i = 0; i < n; ++i) {
    const double psi = 1.2 * s.data.x(i, 0) - 0.8 * s.data.x(i, 1 % p);
    std::binomial_distribution<int> b(s.data.c[i], 1.0 / (1.0 + std::exp(-psi)));
    s.data.y[i] = b(eng);
  }
  s.model = ModelConfig::defaults(s.data, Likelihood::binomial);
  s.model.tau = 0.5;
  s.model.tau_bias = 0.5;
  s.model.h = 0.3;
  return s;
}

}  // namespace

TEST_CASE("eta weighting") {
  CHECK(eta(0.37, 100, Variant::tgs, 5.0) == 1.0);
  CHECK(eta(0.0, 100, Variant::wtgs, 5.0) == doctest::Approx(0.05));
  CHECK(eta(0.5, 10, Variant::wtgs, 5.0) == doctest::Approx(1.0));
  CHECK(eta(0.5, 10, Variant::wgs, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("phi and the i-distribution") {
  const SamplerConfig tgs = tgs_config();
  CHECK(phi(frozen_state({0.5}, 1.0), tgs) == doctest::Approx(2.0));
  const ChainState s = frozen_state({0.5, 0.25}, 1.0);
  CHECK(phi(s, tgs) == doctest::Approx(2.5));
  const Eigen::VectorXd m = i_masses(s, tgs);
  const double total = m.sum();
  CHECK(m[0] / total == doctest::Approx(0.4));
  CHECK(m[1] / total == doctest::Approx(0.2));
  CHECK(m[2] / total == doctest::Approx(0.4));
  CHECK(std::abs(m.sum() / total - 1.0) < 1e-12);

  // Saturation: current-state probabilities near one give phi -> xi + 1/2.
  CHECK(phi(frozen_state({1.0 - 1e-12, 1.0 - 1e-12}, 3.0), tgs) == doctest::Approx(3.5));
  CHECK(1.0 / phi(frozen_state({1.0 - 1e-18, 1.0 - 1e-18}, 3.0), tgs) <= weight_bound(3.0, 2, tgs));

  // xi -> 0 removes the omega arm.
  CHECK(i_masses(frozen_state({0.5, 0.25}, 0.0), tgs)[0] == 0.0);

  SamplerConfig wgs;
  wgs.variant = Variant::wgs;
  ChainState w = frozen_state({0.5, 0.25}, 1.0);
  // wGS: xi + (1/P) Σ η, η = cond_pip + ε/P.
  CHECK(phi(w, wgs) == doctest::Approx(1.0 + 0.5 * ((0.5 + 2.5) + (0.75 + 2.5))));
}

TEST_CASE("sample_i empirical frequencies") {
  const SamplerConfig tgs = tgs_config();
  const ChainState s = frozen_state({0.5, 0.25}, 1.0);
  Rng rng(3);
  const long n = 100000;
  std::vector<long> counts(3, 0);
  for (long i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_i(s, tgs, rng))];
  const std::vector<double> expect{0.4, 0.2, 0.4};
  for (std::size_t k = 0; k < 3; ++k) {
    const double se = std::sqrt(expect[k] * (1.0 - expect[k]) / n);
    CHECK(std::abs(counts[k] / static_cast<double>(n) - expect[k]) < 3.5 * se);
  }

  // eta = 1 and equal conditionals: uniform over covariates given i > 0.
  const ChainState eq = frozen_state(std::vector<double>(5, 0.3), 0.7);
  std::vector<long> c5(6, 0);
  for (long i = 0; i < n; ++i) ++c5[static_cast<std::size_t>(sample_i(eq, tgs, rng))];
  const long covariate_draws = n - c5[0];
  for (std::size_t k = 1; k < 6; ++k) {
    const double se = std::sqrt(0.2 * 0.8 / covariate_draws);
    CHECK(std::abs(c5[k] / static_cast<double>(covariate_draws) - 0.2) < 3.5 * se);
  }
}

TEST_CASE("flip and Metropolized-Gibbs acceptance") {
  const InclusionState g(3, {1});
  const InclusionState f = flip(g, 1);
  CHECK(f.active() == std::vector<Index>{0, 1});
  CHECK(flip(f, 1) == g);
  CHECK(flip(g, 2).size() == 0);
  CHECK_THROWS_AS(flip(g, 0), std::out_of_range);
  CHECK_THROWS_AS(flip(g, 4), std::out_of_range);

  CHECK(mg_accept(0.5, 0) == 1.0);
  CHECK(mg_accept(0.5, 1) == 1.0);
  CHECK(mg_accept(0.75, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(mg_accept(0.75, 0) == 1.0);
}

TEST_CASE("xi adaptation step") {
  CHECK(adapt_xi(5.0, 10.0, 0, 0.25) == doctest::Approx(4.75));
  CHECK(adapt_xi(2.5, 10.0, 7, 0.25) == doctest::Approx(2.5));
  CHECK(adapt_xi(0.01, 0.011, 0, 0.25) == doctest::Approx(1e-3));
  CHECK(adapt_xi(0.002, 0.0022, 0, 0.25) == doctest::Approx(2e-4));
}

TEST_CASE("omega acceptance ratio against the dense oracle") {
  std::mt19937_64 eng(6);
  const Dataset d = oracle::random_dataset(6, 3, eng, 6);
  ModelConfig m = ModelConfig::defaults(d, Likelihood::binomial);
  m.tau = 0.7;
  m.tau_bias = 0.7;
  const std::vector<Index> active{1};
  const InclusionState g(3, active);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd w = oracle::random_omega(6, eng);
    const Eigen::VectorXd w2 = oracle::random_omega(6, eng);
    const double lib = omega_log_acceptance(g, w, w2, d, m);
    const double ref = oracle::log_acceptance(d, active, w, w2, m, std::nullopt, std::nullopt);
    CHECK(std::abs(lib - ref) < 1e-8);
  }
  const Eigen::VectorXd w = oracle::random_omega(6, eng);
  CHECK(std::abs(omega_log_acceptance(g, w, w, d, m)) < 1e-12);
}

TEST_CASE("single retained sample carries weight one") {
  const Small s = small_problem(20, 5, 1);
  SamplerConfig c;
  c.iterations = 51;
  c.burn_in = 50;
  c.sample_thin = 1;
  Rng rng(5);
  const ChainResult r = run_chain(s.data, s.model, c, rng);
  REQUIRE(r.retained == 1);
  REQUIRE(r.samples.size() == 1);
  CHECK((r.pips - r.samples[0].cond_pips).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((rao_blackwell_pips(r.samples) - r.samples[0].cond_pips).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Rao-Blackwell estimator") {
  WeightedSample a;
  a.rho_tilde = 0.3;
  a.cond_pips = Eigen::Vector3d(0.1, 0.5, 0.9);
  std::vector<WeightedSample> same(4, a);
  same[2].rho_tilde = 2.0;
  CHECK((rao_blackwell_pips(same) - a.cond_pips).cwiseAbs().maxCoeff() < 1e-15);
  WeightedSample b = a;
  b.rho_tilde = 0.1;
  b.cond_pips = Eigen::Vector3d(0.5, 0.1, 0.1);
  const Eigen::VectorXd mix = rao_blackwell_pips({a, b});
  CHECK(mix[0] == doctest::Approx(0.75 * 0.1 + 0.25 * 0.5));
  CHECK_THROWS_AS(rao_blackwell_pips({}), std::invalid_argument);
}

TEST_CASE("chains are reproducible and respect the weight bounds") {
  const Small s = small_problem(40, 12, 2);
  for (Variant v : {Variant::tgs, Variant::wtgs, Variant::wgs}) {
    CAPTURE(to_string(v));
    SamplerConfig c;
    c.variant = v;
    c.iterations = 3000;
    c.burn_in = 500;
    c.record_trace = true;
    c.seed = 9;
    Rng r1 = Rng::for_chain(c.seed, 0);
    Rng r2 = Rng::for_chain(c.seed, 0);
    const ChainResult a = run_chain(s.data, s.model, c, r1);
    const ChainResult b = run_chain(s.data, s.model, c, r2);
    CHECK(a.pips == b.pips);
    CHECK(a.omega_final == b.omega_final);
    CHECK(a.xi_final == b.xi_final);
    CHECK(a.trace.size() == b.trace.size());
    const double bound = weight_bound(a.xi_final, s.data.cols(), c);
    for (const auto& row : a.trace) {
      if (row.t > c.burn_in) REQUIRE(row.rho_tilde <= bound);
    }
    CHECK(a.max_rho_tilde <= bound);
    CHECK(a.pips.minCoeff() >= 0.0);
    CHECK(a.pips.maxCoeff() <= 1.0);
  }

  // Fixed xi: no adaptation, bound holds from the first iteration.
  SamplerConfig c;
  c.xi = 2.0;
  c.iterations = 2000;
  c.burn_in = 200;
  c.record_trace = true;
  Rng rng(4);
  const ChainResult r = run_chain(s.data, s.model, c, rng);
  CHECK(r.xi_final == 2.0);
  for (const auto& row : r.trace) REQUIRE(row.rho_tilde <= weight_bound(2.0, s.data.cols(), c));
}

TEST_CASE("frozen omega: every variant targets p(gamma | omega, D)") {
  const Small s = small_problem(30, 3, 3);
  for (Variant v : {Variant::tgs, Variant::wtgs, Variant::wgs}) {
    CAPTURE(to_string(v));
    SamplerConfig c;
    c.variant = v;
    c.freeze_omega = true;
    c.iterations = 60000;
    c.burn_in = 1000;
    c.sample_thin = 1;
    Rng rng(17);
    const ChainResult r = run_chain(s.data, s.model, c, rng);
    CHECK(r.i0_count == 0);
    CHECK(r.xi_final == 0.0);
    const Eigen::VectorXd exact = oracle::enumerate_pips(s.data, r.omega_initial, s.model, std::nullopt);
    CHECK((r.pips - exact).cwiseAbs().maxCoeff() < 0.02);

    // Reweighted visit frequencies of the 8 models.
    const EnumerationResult e = enumerate_posterior(s.data, r.omega_initial, s.model, std::nullopt);
    std::vector<double> freq(8, 0.0);
    double total = 0.0;
    for (const auto& smp : r.samples) {
      unsigned mask = 0;
      for (Index j : smp.gamma) mask |= 1u << j;
      freq[mask] += smp.rho_tilde;
      total += smp.rho_tilde;
    }
    for (unsigned mask = 0; mask < 8; ++mask) {
      CAPTURE(mask);
      CHECK(std::abs(freq[mask] / total - std::exp(e.log_probs[mask])) < 0.03);
    }
  }
}

TEST_CASE("omega updates: acceptance and adaptation on a binomial problem") {
  const CorrelatedData sim = simulate_correlated(64, 16, 4);
  ModelConfig m = ModelConfig::defaults(sim.data, Likelihood::binomial);
  m.h = 1.0 / 16.0;
  SamplerConfig c;
  c.iterations = 12000;
  c.burn_in = 2000;
  Rng rng(8);
  const ChainResult r = run_chain(sim.data, m, c, rng);
  CHECK(r.omega_proposals > 1000);
  CHECK(r.omega_accept_rate() > 0.4);
  CHECK(r.omega_accept_rate() < 0.99);
  CHECK(r.i0_fraction() == doctest::Approx(0.25).epsilon(0.25));
  CHECK(r.pips[0] + r.pips[1] == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("configuration validation") {
  SamplerConfig c;
  c.iterations = 10;
  c.burn_in = 10;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.iterations = 11;
  c.f_omega = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.f_omega = 0.25;
  c.xi = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_variant("wtgs") == Variant::wtgs);
  CHECK_THROWS_AS(parse_variant("gibbs"), std::invalid_argument);
}
