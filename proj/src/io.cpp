#include "countsel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace countsel {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(Index row, const std::string& col) {
  return "row " + std::to_string(row) + ", column '" + col + "'";
}

double parse_real(const std::string& text, Index row, const std::string& col) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw std::runtime_error("non-numeric cell '" + text + "' at " + where(row, col));
  }
  return value;
}

long parse_count(const std::string& text, Index row, const std::string& col) {
  const double v = parse_real(text, row, col);
  if (v < 0.0 || v != std::floor(v)) {
    throw std::runtime_error("expected a non-negative integer, got '" + text + "' at " +
                             where(row, col));
  }
  return static_cast<long>(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string join_indices(const std::vector<Index>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(idx[k] + 1);
  }
  return s;
}

std::string join_values(const Eigen::VectorXd& v) {
  std::string s;
  for (Index k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += format_double(v[k]);
  }
  return s;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

Dataset load_csv(const std::string& path, const std::string& response_col,
                 const std::optional<std::string>& count_col, Likelihood likelihood) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
  std::vector<std::string> header = split(line, ',');
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  Index y_pos = -1;
  Index c_pos = -1;
  std::vector<Index> x_pos;
  Dataset data;
  for (Index k = 0; k < static_cast<Index>(header.size()); ++k) {
    const std::string& h = header[static_cast<std::size_t>(k)];
    if (h == response_col) {
      y_pos = k;
    } else if (count_col && h == *count_col) {
      c_pos = k;
    } else {
      x_pos.push_back(k);
      data.names.push_back(h);
    }
  }
  if (y_pos < 0) throw std::runtime_error("response column '" + response_col + "' not found");
  if (count_col && c_pos < 0) {
    throw std::runtime_error("count column '" + *count_col + "' not found");
  }
  if (x_pos.empty()) throw std::runtime_error("no covariate columns in '" + path + "'");

  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  std::vector<int> cs;
  Index row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw std::runtime_error("row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    for (auto& c : cells) c = trim(c);
    const long y = parse_count(cells[static_cast<std::size_t>(y_pos)], row, response_col);
    long c = 1;
    if (c_pos >= 0) {
      c = parse_count(cells[static_cast<std::size_t>(c_pos)], row, *count_col);
      if (likelihood == Likelihood::binomial && c < 1) {
        throw std::runtime_error("total count must be positive at " + where(row, *count_col));
      }
    }
    if (likelihood == Likelihood::binomial && y > c) {
      throw std::runtime_error("response " + std::to_string(y) + " exceeds total count " +
                               std::to_string(c) + " at " + where(row, response_col));
    }
    std::vector<double> xr;
    xr.reserve(x_pos.size());
    for (Index k : x_pos) {
      const std::string& name = header[static_cast<std::size_t>(k)];
      const double v = parse_real(cells[static_cast<std::size_t>(k)], row, name);
      if (!std::isfinite(v)) throw std::runtime_error("non-finite value at " + where(row, name));
      xr.push_back(v);
    }
    xs.push_back(std::move(xr));
    ys.push_back(static_cast<int>(y));
    cs.push_back(static_cast<int>(c));
  }
  if (row == 0) throw std::runtime_error("'" + path + "' has no data rows");

  const Index n = row;
  const Index p = static_cast<Index>(x_pos.size());
  data.x.resize(n, p);
  data.y.resize(n);
  data.c.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) data.x(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    data.y[i] = ys[static_cast<std::size_t>(i)];
    data.c[i] = cs[static_cast<std::size_t>(i)];
  }
  data.validate(likelihood);
  return data;
}

void write_dataset(const std::string& path, const Dataset& data, bool with_counts) {
  std::ofstream out = open_out(path);
  out << "y";
  if (with_counts) out << ",c";
  for (const auto& name : data.names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    out << data.y[i];
    if (with_counts) out << ',' << (data.c.size() ? data.c[i] : 1);
    for (Index j = 0; j < data.cols(); ++j) out << ',' << format_double(data.x(i, j));
    out << '\n';
  }
}

void write_pips_csv(const std::string& path, const std::vector<std::string>& names,
                    const Eigen::VectorXd& pips, const Eigen::VectorXd& beta_mean,
                    const Eigen::VectorXd& beta_std) {
  std::ofstream out = open_out(path);
  out << "name,pip,beta_cond_mean,beta_cond_std\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const Index k = static_cast<Index>(j);
    out << names[j] << ',' << format_double(pips[k]) << ',' << format_double(beta_mean[k]) << ','
        << format_double(beta_std[k]) << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<std::vector<TraceRow>>& traces) {
  std::ofstream out = open_out(path);
  out << "chain,t,rho_tilde,gamma_size,i_drawn,log_nu\n";
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (const auto& r : traces[c]) {
      out << c << ',' << r.t << ',' << format_double(r.rho_tilde) << ',' << r.gamma_size << ','
          << r.i_drawn << ',' << format_double(r.log_nu) << '\n';
    }
  }
}

void write_samples_csv(const std::string& path,
                       const std::vector<std::vector<WeightedSample>>& samples) {
  std::ofstream out = open_out(path);
  out << "chain,t,rho_tilde,log_nu,gamma,beta\n";
  for (std::size_t c = 0; c < samples.size(); ++c) {
    for (const auto& s : samples[c]) {
      out << c << ',' << s.t << ',' << format_double(s.rho_tilde) << ','
          << format_double(s.log_nu) << ',' << join_indices(s.gamma) << ','
          << join_values(s.beta) << '\n';
    }
  }
}

std::vector<LoadedSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<LoadedSample> out;
  Index row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != 6) {
      throw std::runtime_error("row " + std::to_string(row) + " of '" + path +
                               "' does not have 6 cells");
    }
    LoadedSample ls;
    ls.chain = static_cast<int>(parse_count(cells[0], row, "chain"));
    ls.sample.t = parse_count(cells[1], row, "t");
    ls.sample.rho_tilde = parse_real(cells[2], row, "rho_tilde");
    ls.sample.log_nu = parse_real(cells[3], row, "log_nu");
    if (!cells[4].empty()) {
      for (const auto& g : split(cells[4], ';')) {
        ls.sample.gamma.push_back(static_cast<Index>(parse_count(g, row, "gamma")) - 1);
      }
    }
    const std::vector<std::string> b = split(cells[5], ';');
    ls.sample.beta.resize(static_cast<Index>(b.size()));
    for (std::size_t k = 0; k < b.size(); ++k) {
      ls.sample.beta[static_cast<Index>(k)] = parse_real(b[k], row, "beta");
    }
    if (ls.sample.beta.size() != static_cast<Index>(ls.sample.gamma.size()) + 1) {
      throw std::runtime_error("row " + std::to_string(row) + " of '" + path +
                               "': beta length does not match gamma");
    }
    out.push_back(std::move(ls));
  }
  return out;
}

}  // namespace countsel
