#pragma once

// CSV dialect: comma separated, one header row, no quoting, '.' decimal point.

#include <optional>
#include <string>
#include <vector>

#include "countsel/glm.hpp"
#include "countsel/state.hpp"

namespace countsel {

/// Every column other than the response and count columns becomes a covariate,
/// in header order. Without a count column, C defaults to all ones.
/// Errors name the offending row (1-based, header excluded) and column.
Dataset load_csv(const std::string& path, const std::string& response_col,
                 const std::optional<std::string>& count_col, Likelihood likelihood);

/// Header `y[,c],<names...>`; the count column is written when `with_counts`.
void write_dataset(const std::string& path, const Dataset& data, bool with_counts = true);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// name, pip, beta_cond_mean, beta_cond_std
void write_pips_csv(const std::string& path, const std::vector<std::string>& names,
                    const Eigen::VectorXd& pips, const Eigen::VectorXd& beta_mean,
                    const Eigen::VectorXd& beta_std);

/// chain, t, rho_tilde, gamma_size, i_drawn, log_nu
void write_trace_csv(const std::string& path, const std::vector<std::vector<TraceRow>>& traces);

/// chain, t, rho_tilde, log_nu, gamma, beta. gamma holds 1-based covariate
/// indices and beta the bias followed by the included coefficients, both
/// separated by ';'.
void write_samples_csv(const std::string& path,
                       const std::vector<std::vector<WeightedSample>>& samples);

struct LoadedSample {
  int chain = 0;
  WeightedSample sample;
};
std::vector<LoadedSample> read_samples_csv(const std::string& path);

}  // namespace countsel
