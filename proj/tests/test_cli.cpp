#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "countsel/cli.hpp"
#include "countsel/sampler.hpp"

namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  const char* env = std::getenv("COUNTSEL_TEST_TMP");
  const fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "countsel_cli";
  fs::create_directories(dir);
  return dir;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "countsel");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // Keep the test log readable.
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = countsel::cli_run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  Table rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

std::vector<double> pip_column(const std::string& path) {
  const Table t = read_csv(path);
  std::vector<double> out;
  for (std::size_t i = 1; i < t.size(); ++i) out.push_back(std::stod(t[i][1]));
  return out;
}

}  // namespace

TEST_CASE("simulate writes the correlated scenario") {
  REQUIRE(run({"simulate", "--scenario", "correlated", "--n", "32", "--p", "32", "--seed", "1",
               "--out", at("corr.csv")}) == 0);
  const Table t = read_csv(at("corr.csv"));
  REQUIRE(t.size() == 33);
  CHECK(t[0].size() == 34);
  CHECK(t[0][0] == "y");
  CHECK(t[0][1] == "c");
  CHECK(t[0][2] == "x1");
  CHECK(t[1][1] == "10");
}

TEST_CASE("run with defaults") {
  REQUIRE(run({"simulate", "--scenario", "correlated", "--n", "32", "--p", "32", "--seed", "1",
               "--out", at("corr.csv")}) == 0);
  REQUIRE(run({"run", "--data", at("corr.csv"), "--seed", "1", "--out-dir", at("run_a")}) == 0);
  const std::vector<double> pips = pip_column(at("run_a/pips.csv"));
  REQUIRE(pips.size() == 32);
  for (double p : pips) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(pips[0] + pips[1] > 0.8);
  CHECK(pips[0] + pips[1] < 1.2);
  const nlohmann::json s = read_json(at("run_a/summary.json"));
  CHECK(s["omega_accept_rate"].get<double>() > 0.0);
  CHECK(s["max_rho_tilde"].get<double>() <= s["weight_bound"].get<double>());

  SUBCASE("same seed, same bytes") {
    REQUIRE(run({"run", "--data", at("corr.csv"), "--seed", "1", "--out-dir", at("run_b")}) == 0);
    CHECK(slurp(at("run_a/pips.csv")) == slurp(at("run_b/pips.csv")));
  }
  SUBCASE("fixed xi") {
    REQUIRE(run({"run", "--data", at("corr.csv"), "--xi", "2", "--iters", "2000", "--burnin", "500",
                 "--out-dir", at("run_xi")}) == 0);
    CHECK(read_json(at("run_xi/summary.json"))["xi_final"].get<double>() == 2.0);
  }
}

TEST_CASE("trace respects the weight bound and the omega fraction") {
  REQUIRE(run({"simulate", "--scenario", "correlated", "--n", "32", "--p", "16", "--seed", "3",
               "--out", at("corr16.csv")}) == 0);
  REQUIRE(run({"run", "--data", at("corr16.csv"), "--variant", "wtgs", "--iters", "21000", "--burnin",
               "1000", "--trace", "--seed", "5", "--out-dir", at("run_trace")}) == 0);
  const nlohmann::json s = read_json(at("run_trace/summary.json"));
  const double xi = s["xi_final"].get<double>();
  countsel::SamplerConfig c;
  c.variant = countsel::Variant::wtgs;
  const double bound = countsel::weight_bound(xi, 16, c);
  const Table t = read_csv(at("run_trace/trace.csv"));
  REQUIRE(t.size() == 21001);
  CHECK(t[0] == std::vector<std::string>{"chain", "t", "rho_tilde", "gamma_size", "i_drawn", "log_nu"});
  long violations = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::stol(t[i][1]) > 1000 && std::stod(t[i][2]) > bound) ++violations;
  }
  CHECK(violations == 0);
  CHECK(std::abs(s["i0_fraction"].get<double>() - 0.25) < 0.05);
}

TEST_CASE("frozen run matches the oracle") {
  REQUIRE(run({"simulate", "--scenario", "correlated", "--n", "40", "--p", "6", "--seed", "8",
               "--out", at("small.csv")}) == 0);
  REQUIRE(run({"oracle", "--data", at("small.csv"), "--h", "0.3", "--tau", "0.5", "--seed", "4",
               "--out", at("oracle.csv")}) == 0);
  REQUIRE(run({"run", "--data", at("small.csv"), "--h", "0.3", "--tau", "0.5", "--seed", "4",
               "--freeze-omega", "--variant", "tgs", "--iters", "40000", "--burnin", "2000",
               "--out-dir", at("run_frozen")}) == 0);
  const std::vector<double> exact = pip_column(at("oracle.csv"));
  const std::vector<double> est = pip_column(at("run_frozen/pips.csv"));
  REQUIRE(exact.size() == 6);
  REQUIRE(est.size() == 6);
  for (std::size_t j = 0; j < 6; ++j) {
    CAPTURE(j);
    CHECK(std::abs(exact[j] - est[j]) < 0.03);
  }
}

TEST_CASE("negative-binomial run and diagnose") {
  REQUIRE(run({"simulate", "--scenario", "negbin", "--n", "300", "--p", "12", "--seed", "2",
               "--n-test", "200", "--test-out", at("nb_test.csv"), "--out", at("nb.csv")}) == 0);
  const Table t = read_csv(at("nb.csv"));
  CHECK(t.size() == 301);
  CHECK(t[0][1] == "c");
  REQUIRE(run({"run", "--data", at("nb.csv"), "--likelihood", "negbin", "--iters", "6000", "--burnin",
               "1000", "--sample-thin", "10", "--trace", "--out-dir", at("run_nb")}) == 0);
  const nlohmann::json s = read_json(at("run_nb/summary.json"));
  CHECK(s.contains("nu_posterior_mean"));
  const std::vector<double> pips = pip_column(at("run_nb/pips.csv"));
  CHECK(pips[0] > 0.5);
  CHECK(pips[1] > 0.5);
  REQUIRE(run({"diagnose", "--run-dir", at("run_nb"), "--data", at("nb_test.csv")}) == 0);
  const nlohmann::json d = read_json(at("run_nb/diagnostics.json"));
  CHECK(d["pit"]["n"].get<int>() == 200);
  CHECK(d["weights"]["bound_violations"].get<long>() == 0);
  CHECK(read_csv(at("run_nb/pit.csv")).size() == 201);
}

TEST_CASE("bad input gives a nonzero exit") {
  CHECK(run({"run", "--no-such-flag"}) != 0);
  CHECK(run({"run", "--data", at("does_not_exist.csv")}) != 0);
  CHECK(run({"run", "--data", at("corr.csv"), "--variant", "gibbs"}) != 0);
  CHECK(run({"simulate", "--scenario", "correlated", "--p", "2", "--out", at("x.csv")}) != 0);
  CHECK(run({}) != 0);
}
