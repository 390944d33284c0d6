#include "countsel/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "countsel/negbin.hpp"
#include "countsel/rng.hpp"

namespace countsel {

std::vector<std::string> default_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

CorrelatedData simulate_correlated(Index n, Index p, std::uint64_t seed) {
  if (p < 3) throw std::invalid_argument("correlated scenario needs P >= 3");
  if (n < 1) throw std::invalid_argument("correlated scenario needs N >= 1");
  Rng rng(seed);
  const double noise_sd = std::sqrt(1e-4);
  CorrelatedData out;
  Dataset& d = out.data;
  d.x.resize(n, p);
  d.y.resize(n);
  d.c = Eigen::VectorXi::Constant(n, 10);
  d.names = default_names(p);
  out.z.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double z = rng.normal();
    out.z[i] = z;
    d.x(i, 0) = z + noise_sd * rng.normal();
    d.x(i, 1) = z + noise_sd * rng.normal();
    for (Index j = 2; j < p; ++j) d.x(i, j) = rng.normal();
    d.y[i] = rng.binomial(d.c[i], logistic_clamped(z));
  }
  return out;
}

Dataset simulate_negbin(Index n, Index p, const std::vector<Index>& active,
                        const std::vector<double>& betas, double nu, double psi0,
                        std::uint64_t seed) {
  if (active.size() != betas.size()) {
    throw std::invalid_argument("active indices and betas differ in length");
  }
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  for (Index j : active) {
    if (j < 0 || j >= p) throw std::out_of_range("active covariate outside 1..P");
  }
  Rng rng(seed);
  Dataset d;
  d.x.resize(n, p);
  d.y.resize(n);
  d.c = Eigen::VectorXi::Ones(n);
  d.names = default_names(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    double psi = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) psi += betas[k] * d.x(i, active[k]);
    d.y[i] = sample_negbin(std::exp(psi + psi0), nu, rng);
  }
  return d;
}

}  // namespace countsel
