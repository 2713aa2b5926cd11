#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kroncov/estimation.hpp"
#include "kroncov/sampling.hpp"

#include <json.hpp>

namespace kroncov {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest exact decimal representation (round-trips to the same double).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double check = 0.0;
  std::sscanf(buf, "%lf", &check);
  if (check == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &check);
      if (check == v) return shorter;
    }
  }
  return buf;
}

}  // namespace detail

/// Sample-set text format: optional '#' comment lines, a header line
/// "p q n", then n blocks of p lines with q whitespace-separated numbers.
inline SampleSet read_sample_set(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  if (tokens.size() < 3) {
    throw ParseError("sample set: missing 'p q n' header");
  }
  const auto to_count = [](const std::string& tok, const char* what) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
      return static_cast<Eigen::Index>(v);
    } catch (const std::exception&) {
      throw ParseError(std::string("sample set: bad ") + what + " '" + tok + "'");
    }
  };
  const Eigen::Index p = to_count(tokens[0], "p");
  const Eigen::Index q = to_count(tokens[1], "q");
  const Eigen::Index n = to_count(tokens[2], "n");
  const std::size_t expected = static_cast<std::size_t>(p * q * n);
  if (tokens.size() - 3 != expected) {
    throw ParseError("sample set: expected " + std::to_string(expected) +
                     " entries, found " + std::to_string(tokens.size() - 3));
  }
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  std::size_t k = 3;
  for (Eigen::Index s = 0; s < n; ++s) {
    Eigen::MatrixXd m(p, q);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < q; ++j) {
        const std::string& tok = tokens[k++];
        try {
          std::size_t pos = 0;
          m(i, j) = std::stod(tok, &pos);
          if (pos != tok.size() || !std::isfinite(m(i, j))) {
            throw std::invalid_argument(tok);
          }
        } catch (const std::exception&) {
          throw ParseError("sample set: bad number '" + tok + "'");
        }
      }
    }
    samples.push_back(std::move(m));
  }
  return SampleSet(p, q, std::move(samples));
}

inline SampleSet read_sample_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_sample_set(in);
}

inline void write_sample_set(std::ostream& out, const SampleSet& x) {
  out << "# kroncov sample set: header 'p q n', then n blocks of p rows\n";
  out << x.p() << ' ' << x.q() << ' ' << x.size() << '\n';
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    for (Eigen::Index i = 0; i < x.p(); ++i) {
      for (Eigen::Index j = 0; j < x.q(); ++j) {
        if (j > 0) out << ' ';
        out << detail::format_double(x[static_cast<std::size_t>(s)](i, j));
      }
      out << '\n';
    }
  }
}

inline void write_sample_set(const std::filesystem::path& path,
                             const SampleSet& x) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  write_sample_set(out, x);
}

inline nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Estimate result record, schema "kroncov.estimate.v1" (documented in the
/// README). Key order is fixed so reruns are byte-identical.
inline nlohmann::ordered_json estimate_record(
    const EstimationResult& result, const std::string& estimator,
    const std::string& mean_mode, Eigen::Index n, double tol, int max_iters) {
  nlohmann::ordered_json j;
  j["record"] = "kroncov.estimate.v1";
  j["estimator"] = estimator;
  j["mean_mode"] = mean_mode;
  j["p"] = result.pair.p_dim();
  j["q"] = result.pair.q_dim();
  j["n"] = n;
  j["status"] = to_string(result.status);
  j["iterations"] = result.iterations;
  j["residual"] = result.residual;
  j["tol"] = tol;
  j["max_iters"] = max_iters;
  j["normalization"] = to_string(result.pair.normalization());
  j["row_factor"] = matrix_to_json(result.pair.p_factor().mat());
  j["col_factor"] = matrix_to_json(result.pair.q_factor().mat());
  j["mean"] = matrix_to_json(result.mean);
  j["objective_trace"] = result.objective_trace;
  return j;
}

}  // namespace kroncov
