#include "countsel/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "countsel/harness.hpp"
#include "countsel/io.hpp"
#include "countsel/oracle.hpp"
#include "countsel/sampler.hpp"
#include "countsel/simulate.hpp"

namespace countsel {
namespace {

namespace fs = std::filesystem;

struct DataFlags {
  std::string path;
  std::string response = "y";
  std::string count_col;
  std::string likelihood = "binomial";
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool required = true) {
  auto* opt = cmd->add_option("--data", f.path, "CSV file with a header row");
  if (required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--response", f.response, "Response column")->capture_default_str();
  cmd->add_option("--count-col", f.count_col,
                  "Total-count column (default: 'c' when present)");
  cmd->add_option("--likelihood", f.likelihood, "binomial or negbin")
      ->check(CLI::IsMember({"binomial", "negbin", "negative-binomial"}))
      ->capture_default_str();
}

std::vector<std::string> header_of(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cols.push_back(cell);
  }
  return cols;
}

Dataset load(const DataFlags& f, const std::string& path) {
  std::optional<std::string> count;
  if (!f.count_col.empty()) {
    count = f.count_col;
  } else {
    const auto cols = header_of(path);
    if (std::find(cols.begin(), cols.end(), "c") != cols.end() && f.response != "c") count = "c";
  }
  return load_csv(path, f.response, count, parse_likelihood(f.likelihood));
}

struct ModelFlags {
  std::optional<double> tau;
  std::optional<double> h;
  std::optional<double> psi0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--tau", m.tau, "Coefficient prior precision (default 0.01)");
  cmd->add_option("--h", m.h, "Prior inclusion probability (default 5/P)");
  cmd->add_option("--psi0", m.psi0, "Negative-binomial offset (default log mean Y)");
}

ModelConfig model_config(const Dataset& data, Likelihood lik, const ModelFlags& m) {
  ModelConfig cfg = ModelConfig::defaults(data, lik);
  if (m.tau) {
    cfg.tau = *m.tau;
    cfg.tau_bias = *m.tau;
  }
  if (m.h) cfg.h = *m.h;
  if (m.psi0) cfg.psi0 = *m.psi0;
  cfg.validate();
  return cfg;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

struct RunFlags {
  DataFlags data;
  ModelFlags model;
  std::string variant = "wtgs";
  long iters = 11000;
  long burnin = 1000;
  std::optional<double> xi;
  double epsilon = 5.0;
  double f_omega = 0.25;
  std::uint64_t seed = 0;
  int chains = 1;
  std::string out_dir = "countsel_out";
  bool trace = false;
  long sample_thin = 0;
  bool freeze_omega = false;
  double nu_rw_scale = 0.03;
  double anneal_frac = 0.5;
};

int do_run(const RunFlags& f) {
  const Dataset data = load(f.data, f.data.path);
  const Likelihood lik = parse_likelihood(f.data.likelihood);
  const ModelConfig model = model_config(data, lik, f.model);

  SamplerConfig s;
  s.variant = parse_variant(f.variant);
  s.iterations = f.iters;
  s.burn_in = f.burnin;
  s.xi = f.xi;
  s.epsilon = f.epsilon;
  s.f_omega = f.f_omega;
  s.seed = f.seed;
  s.anneal_frac = f.anneal_frac;
  s.nu_rw_scale = f.nu_rw_scale;
  s.freeze_omega = f.freeze_omega;
  s.record_trace = f.trace;
  s.sample_thin = f.sample_thin;
  s.validate();

  const std::vector<ChainResult> results = run_chains(data, model, s, f.chains);
  const RunSummary summary = summarize(results, data, model, s);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_pips_csv((dir / "pips.csv").string(), data.names, summary.pips, summary.beta_cond_mean,
                 summary.beta_cond_std);
  write_json((dir / "summary.json").string(), to_json(summary));
  if (f.trace) {
    std::vector<std::vector<TraceRow>> traces;
    for (const auto& r : results) traces.push_back(r.trace);
    write_trace_csv((dir / "trace.csv").string(), traces);
  }
  if (f.sample_thin > 0) {
    std::vector<std::vector<WeightedSample>> samples;
    for (const auto& r : results) samples.push_back(r.samples);
    write_samples_csv((dir / "samples.csv").string(), samples);
  }
  if (summary.numeric_failures > 0) {
    std::cerr << "warning: " << summary.numeric_failures
              << " omega proposals had a non-finite acceptance ratio and were rejected\n";
  }
  if (summary.clamp_events > 0) {
    std::cerr << "warning: " << summary.clamp_events
              << " conditional probabilities were clamped to avoid underflow\n";
  }
  std::cout << "wrote " << (dir / "pips.csv").string() << " (" << data.cols() << " covariates, "
            << f.chains << " chain(s), " << summary.wall_time << " s)\n";
  return 0;
}

struct SimFlags {
  std::string scenario = "correlated";
  long n = 100;
  long p = 10;
  std::uint64_t seed = 0;
  std::string out = "data.csv";
  long n_test = 0;
  std::string test_out;
  double nu = 1.0;
  double psi0 = 1.0;
  std::vector<long> active{1, 2};
  std::vector<double> betas{0.5, -0.5};
};

int do_simulate(const SimFlags& f) {
  const long total = f.n + f.n_test;
  Dataset all;
  if (f.scenario == "correlated") {
    all = simulate_correlated(total, f.p, f.seed).data;
  } else {
    std::vector<Index> active;
    for (long a : f.active) {
      if (a < 1 || a > f.p) throw std::out_of_range("active covariate outside 1..P");
      active.push_back(a - 1);
    }
    all = simulate_negbin(total, f.p, active, f.betas, f.nu, f.psi0, f.seed);
  }
  std::vector<Index> train(static_cast<std::size_t>(f.n));
  std::iota(train.begin(), train.end(), Index{0});
  write_dataset(f.out, all.subset(train));
  if (f.n_test > 0) {
    if (f.test_out.empty()) throw std::invalid_argument("--n-test needs --test-out");
    std::vector<Index> test(static_cast<std::size_t>(f.n_test));
    std::iota(test.begin(), test.end(), Index{f.n});
    write_dataset(f.test_out, all.subset(test));
  }
  return 0;
}

struct OracleFlags {
  DataFlags data;
  ModelFlags model;
  std::uint64_t seed = 0;
  std::string out;
};

int do_oracle(const OracleFlags& f) {
  const Dataset data = load(f.data, f.data.path);
  const Likelihood lik = parse_likelihood(f.data.likelihood);
  const ModelConfig model = model_config(data, lik, f.model);
  // Same stream and draw order as chain 0 of `run --seed <seed>`.
  Rng rng = Rng::for_chain(f.seed, 0);
  const Eigen::VectorXd omega = prior_omega(data, model, rng);
  std::optional<double> nu;
  if (lik == Likelihood::negative_binomial) nu = 1.0;
  const EnumerationResult res = enumerate_posterior(data, omega, model, nu);
  const Eigen::VectorXd nan = Eigen::VectorXd::Constant(data.cols(), std::nan(""));
  if (!f.out.empty()) {
    write_pips_csv(f.out, data.names, res.pips, nan, nan);
  } else {
    std::cout << "name,pip\n";
    for (Index j = 0; j < data.cols(); ++j) {
      std::cout << data.names[static_cast<std::size_t>(j)] << ',' << format_double(res.pips[j])
                << '\n';
    }
  }
  return 0;
}

struct DiagnoseFlags {
  std::string run_dir;
  DataFlags test;
  std::uint64_t seed = 0;
};

int do_diagnose(const DiagnoseFlags& f) {
  const fs::path dir(f.run_dir);
  std::ifstream in(dir / "summary.json");
  if (!in) throw std::runtime_error("no summary.json in '" + f.run_dir + "'");
  const RunSummary summary = summary_from_json(nlohmann::json::parse(in));

  nlohmann::json out;
  out["omega_accept_rate"] = summary.omega_accept_rate;
  out["omega_mean_alpha"] = summary.omega_mean_alpha;
  out["i0_fraction"] = summary.i0_fraction;
  out["xi_final"] = summary.xi_final;
  if (summary.nu_posterior_mean) out["nu_posterior_mean"] = *summary.nu_posterior_mean;

  const fs::path trace = dir / "trace.csv";
  if (fs::exists(trace)) {
    std::ifstream tin(trace);
    std::string line;
    std::getline(tin, line);
    long violations = 0;
    std::vector<double> rho;
    while (std::getline(tin, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 3) continue;
      const auto chain = static_cast<std::size_t>(std::stoul(cells[0]));
      const long t = std::stol(cells[1]);
      const double r = std::stod(cells[2]);
      if (t <= summary.sampler.burn_in) continue;
      rho.push_back(r);
      const double xi = chain < summary.chain_xi.size() ? summary.chain_xi[chain] : summary.xi_final;
      if (r > weight_bound(xi, static_cast<Index>(summary.names.size()), summary.sampler)) {
        ++violations;
      }
    }
    const WeightDiagnostics wd = weight_diagnostics(rho, summary.weight_bound);
    out["weights"] = {{"count", rho.size()},
                      {"min", wd.min_rho},
                      {"max", wd.max_rho},
                      {"mean", wd.mean_rho},
                      {"ess_fraction", wd.ess_fraction},
                      {"bound", summary.weight_bound},
                      {"bound_violations", violations},
                      {"histogram", wd.histogram}};
  }

  const fs::path samples_path = dir / "samples.csv";
  if (!f.test.path.empty()) {
    if (!fs::exists(samples_path)) {
      throw std::runtime_error("PIT needs samples.csv; rerun with --sample-thin");
    }
    DataFlags tf = f.test;
    tf.likelihood = to_string(summary.model.likelihood);
    const Dataset test = load(tf, tf.path);
    std::vector<std::vector<WeightedSample>> chains(static_cast<std::size_t>(summary.chains));
    for (auto& ls : read_samples_csv(samples_path.string())) {
      chains.at(static_cast<std::size_t>(ls.chain)).push_back(std::move(ls.sample));
    }
    Rng rng(f.seed);
    const std::vector<double> pit = compute_pit(pool_chains(chains), test, summary.model, rng);
    const double ks = ks_uniform_statistic(pit);
    const double crit = ks_critical_5pct(pit.size());
    out["pit"] = {{"n", pit.size()}, {"ks", ks}, {"ks_critical_5pct", crit}, {"uniform", ks < crit}};
    std::ofstream pout(dir / "pit.csv");
    pout << "row,pit\n";
    for (std::size_t i = 0; i < pit.size(); ++i) pout << i + 1 << ',' << format_double(pit[i]) << '\n';
  }
  write_json((dir / "diagnostics.json").string(), out);
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int cli_run(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection for binomial and negative-binomial regression"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Fit a dataset with (w)TGS or wGS");
  add_data_flags(run, rf.data);
  add_model_flags(run, rf.model);
  run->add_option("--variant", rf.variant, "wgs, tgs or wtgs")
      ->check(CLI::IsMember({"wgs", "tgs", "wtgs"}))
      ->capture_default_str();
  run->add_option("--iters", rf.iters, "Total iterations T, burn-in included")->capture_default_str();
  run->add_option("--burnin", rf.burnin, "Burn-in iterations")->capture_default_str();
  run->add_option("--xi", rf.xi, "Fix xi instead of adapting it during burn-in");
  run->add_option("--epsilon", rf.epsilon, "Exploration parameter")->capture_default_str();
  run->add_option("--f-omega", rf.f_omega, "Target fraction of omega updates")->capture_default_str();
  run->add_option("--seed", rf.seed, "Random seed")->capture_default_str();
  run->add_option("--chains", rf.chains, "Independent chains")->capture_default_str();
  run->add_option("--out-dir", rf.out_dir, "Output directory")->capture_default_str();
  run->add_flag("--trace", rf.trace, "Write trace.csv");
  run->add_option("--sample-thin", rf.sample_thin,
                  "Write every k-th retained sample to samples.csv (0 = none)")
      ->capture_default_str();
  run->add_flag("--freeze-omega", rf.freeze_omega,
                "Keep omega at its initial draw and force xi = 0");
  run->add_option("--nu-rw-scale", rf.nu_rw_scale, "Random-walk scale for log nu")
      ->capture_default_str();
  run->add_option("--anneal-frac", rf.anneal_frac,
                  "Leading fraction of burn-in without omega rejection")
      ->capture_default_str();

  SimFlags sf;
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  sim->add_option("--scenario", sf.scenario, "correlated or negbin")
      ->check(CLI::IsMember({"correlated", "negbin"}))
      ->capture_default_str();
  sim->add_option("--n", sf.n, "Rows")->capture_default_str();
  sim->add_option("--p", sf.p, "Covariates")->capture_default_str();
  sim->add_option("--seed", sf.seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sf.out, "Output CSV")->capture_default_str();
  sim->add_option("--n-test", sf.n_test, "Extra held-out rows")->capture_default_str();
  sim->add_option("--test-out", sf.test_out, "Output CSV for held-out rows");
  sim->add_option("--nu", sf.nu, "Dispersion (negbin)")->capture_default_str();
  sim->add_option("--psi0", sf.psi0, "Log mean at zero signal (negbin)")->capture_default_str();
  sim->add_option("--active", sf.active, "1-based active covariates (negbin)")->delimiter(',');
  sim->add_option("--betas", sf.betas, "Coefficients of the active covariates (negbin)")
      ->delimiter(',');

  OracleFlags of;
  auto* orc = app.add_subcommand("oracle", "Exact PIPs at a fixed omega by enumeration (P <= 15)");
  add_data_flags(orc, of.data);
  add_model_flags(orc, of.model);
  orc->add_option("--seed", of.seed, "Seed of the omega draw (matches run --seed)")
      ->capture_default_str();
  orc->add_option("--out", of.out, "Output CSV (default: stdout)");

  DiagnoseFlags df;
  auto* diag = app.add_subcommand("diagnose", "Weight, acceptance and PIT summaries of a run");
  diag->add_option("--run-dir", df.run_dir, "Directory written by `run`")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_data_flags(diag, df.test, false);
  diag->get_option("--data")->description("Held-out CSV for the PIT");
  diag->add_option("--seed", df.seed, "Seed of the PIT randomization")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return do_run(rf);
    if (*sim) return do_simulate(sf);
    if (*orc) return do_oracle(of);
    if (*diag) return do_diagnose(df);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace countsel
