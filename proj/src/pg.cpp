#include "countsel/pg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace countsel {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;
constexpr double kTruncRecip = 1.0 / kTrunc;
constexpr int kExactIntegerLimit = 32;
constexpr int kSeriesTerms = 200;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Coefficient a_n(x) of the alternating series for the density of J*(1, z).
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double e = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                   2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(e);
}

// Probability of the truncated-exponential branch of the proposal.
double mass_texpon(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + std::log(normal_cdf(b));
  const double xa = x0 + z + std::log(normal_cdf(a));
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng) {
  double x = kTrunc + 1.0;
  if (kTruncRecip > z) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = 1.0 + e1 * kTrunc;
      x = kTrunc / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
    return x;
  }
  const double mu = 1.0 / z;
  while (x > kTrunc) {
    double y = rng.normal();
    y *= y;
    const double half_mu = 0.5 * mu;
    const double mu_y = mu * y;
    x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

// Exact PG(1, c) draw. Samples J*(1, |c|/2) and rescales by 1/4.
double draw_pg1(double c, Rng& rng) {
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_texpon = mass_texpon(z);
  for (;;) {
    double x;
    if (rng.uniform() < p_texpon) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

// Gamma(r, 1) for fixed 0 < r < 1: Marsaglia-Tsang at shape r + 1, then the
// U^(1/r) boost. Constants are shared by all terms of a series draw.
class SmallShapeGamma {
 public:
  explicit SmallShapeGamma(double r)
      : d_(r + 1.0 - 1.0 / 3.0), c_(1.0 / std::sqrt(9.0 * d_)), inv_r_(1.0 / r) {}

  double operator()(Rng& rng) const {
    double v;
    for (;;) {
      const double x = rng.normal();
      v = 1.0 + c_ * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = rng.uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) break;
      if (std::log(u) < 0.5 * x2 + d_ * (1.0 - v + std::log(v))) break;
    }
    return d_ * v * std::exp(std::log(rng.uniform()) * inv_r_);
  }

 private:
  double d_;
  double c_;
  double inv_r_;
};

// PG(r, c) for 0 < r < 1 from the truncated sum-of-gammas representation,
// with the dropped tail replaced by a moment-matched Gamma variable.
double draw_pg_series(double r, double c, Rng& rng) {
  const SmallShapeGamma gamma_r(r);
  const double d = std::fabs(c) / (2.0 * kPi);
  const double d2 = d * d;
  double sum = 0.0;
  double partial_weights = 0.0;
  for (int k = 1; k <= kSeriesTerms; ++k) {
    const double km = k - 0.5;
    const double w = 1.0 / (km * km + d2);
    partial_weights += w;
    sum += gamma_r(rng) * w;
  }
  // sum_{k>=1} 1 / ((k - 1/2)^2 + d^2) = pi tanh(pi d) / (2 d)
  const double total_weights = d < 1e-8 ? 0.5 * kPi * kPi
                                        : kPi * std::tanh(kPi * d) / (2.0 * d);
  const double tail1 = total_weights - partial_weights;
  const double big_k = kSeriesTerms;
  const double u = d / big_k;
  const double tail2 = u < 1e-3
                           ? 1.0 / (3.0 * big_k * big_k * big_k)
                           : (std::atan(u) / d - big_k / (big_k * big_k + d2)) / (2.0 * d2);
  if (tail1 > 0.0 && tail2 > 0.0) {
    const double shape = r * tail1 * tail1 / tail2;
    const double scale = tail2 / tail1;
    sum += rng.gamma(shape) * scale;
  }
  return sum / (2.0 * kPi * kPi);
}

}  // namespace

void PgParams::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("PG shape b must be positive and finite, got " +
                                std::to_string(b));
  }
  if (!std::isfinite(c)) {
    throw std::invalid_argument("PG tilt c must be finite");
  }
}

double pg_mean(const PgParams& params) {
  params.validate();
  const double c = std::fabs(params.c);
  if (c < 1e-6) return params.b * (0.25 - c * c / 48.0);
  return params.b / (2.0 * c) * std::tanh(0.5 * c);
}

double pg_variance(const PgParams& params) {
  params.validate();
  const double c = std::fabs(params.c);
  if (c < 1e-3) return params.b * (1.0 / 24.0 - c * c / 120.0);
  const double ch = std::cosh(0.5 * c);
  return params.b * (std::sinh(c) - c) / (4.0 * c * c * c * ch * ch);
}

double pg_sample(const PgParams& params, Rng& rng) {
  params.validate();
  const double b = params.b;
  const double c = params.c;
  if (b > kExactIntegerLimit) {
    const double mean = pg_mean(params);
    const double sd = std::sqrt(pg_variance(params));
    double x;
    do {
      x = mean + sd * rng.normal();
    } while (x <= 0.0);
    return x;
  }
  const double rounded = std::round(b);
  const bool integral = std::fabs(b - rounded) < 1e-9;
  const int whole = integral ? static_cast<int>(rounded) : static_cast<int>(std::floor(b));
  double x = 0.0;
  for (int i = 0; i < whole; ++i) x += draw_pg1(c, rng);
  if (!integral) x += draw_pg_series(b - whole, c, rng);
  return x;
}

double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace countsel
