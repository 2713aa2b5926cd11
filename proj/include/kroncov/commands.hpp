#pragma once

#include <iostream>
#include <optional>

#include "kroncov/experiment.hpp"

namespace kroncov {

// Exit codes shared by all subcommands, for scriptability.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitRankFail = 3;
inline constexpr int kExitNoConverge = 4;
inline constexpr int kExitBoundary = 5;

struct EstimateArgs {
  std::filesystem::path input;
  EstimatorTag estimator = EstimatorTag::gff;
  MeanMode mean_mode = MeanMode::unknown;
  double tol = 1e-9;
  int max_iters = 0;  // 0 selects the estimator default
  std::filesystem::path out;  // empty writes the record to stdout
  std::string format = "record";
};

struct SimulateArgs {
  int p = 2;
  int q = 2;
  int n = 10;
  DataModel model = DataModel::matrix_normal;
  double student_t_nu = 3.0;
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

struct PhaseArgs {
  std::filesystem::path config;
  std::filesystem::path out;  // empty writes the CSV to stdout
  int threads = 1;
  std::string format = "csv";
  // Flag-level overrides of the corresponding config fields.
  std::optional<std::uint64_t> seed;
  std::optional<int> k_starts;
  std::optional<double> tol;
  std::optional<int> max_iters;
};

struct DiagnoseArgs {
  std::filesystem::path input;
  std::filesystem::path out;  // empty writes the report to stdout
};

namespace detail {

inline void emit(const std::filesystem::path& out, const std::string& text,
                 std::ostream& fallback) {
  if (out.empty()) {
    fallback << text;
    return;
  }
  std::ofstream file(out);
  if (!file) throw ParseError("cannot open '" + out.string() + "' for writing");
  file << text;
}

}  // namespace detail

inline int cmd_estimate(const EstimateArgs& args,
                        std::ostream& out_stream = std::cout,
                        std::ostream& err_stream = std::cerr) {
  try {
    if (args.format != "record") {
      throw ConfigError("estimate: --format must be 'record'");
    }
    if (args.estimator == EstimatorTag::rff &&
        args.mean_mode != MeanMode::known_zero) {
      throw ConfigError("estimate: rff requires --mean known_zero");
    }
    const SampleSet x = read_sample_set(args.input);
    EstimationResult result = [&] {
      if (args.estimator == EstimatorTag::gff) {
        const int iters = args.max_iters > 0 ? args.max_iters : kGffMaxIters;
        const auto init = KroneckerPair::identity(x.p(), x.q(),
                                                  Normalization::spectral_p);
        return args.mean_mode == MeanMode::unknown
                   ? gff_estimate(x, init, std::nullopt, args.tol, iters)
                   : gff_estimate(x, init,
                                  Eigen::MatrixXd::Zero(x.p(), x.q()),
                                  args.tol, iters);
      }
      const int iters = args.max_iters > 0 ? args.max_iters : kRffMaxIters;
      return rff_estimate(
          x, KroneckerPair::identity(x.p(), x.q(), Normalization::spectral_both),
          args.tol, iters);
    }();
    const int iters_used = args.max_iters > 0
                               ? args.max_iters
                               : (args.estimator == EstimatorTag::gff
                                      ? kGffMaxIters
                                      : kRffMaxIters);
    const auto record = estimate_record(
        result, args.estimator == EstimatorTag::gff ? "gff" : "rff",
        args.mean_mode == MeanMode::unknown ? "unknown" : "known_zero",
        x.size(), args.tol, iters_used);
    detail::emit(args.out, record.dump(2) + "\n", out_stream);
    switch (result.status) {
      case TerminationStatus::converged: return kExitOk;
      case TerminationStatus::max_iters: return kExitNoConverge;
      case TerminationStatus::diverged_to_boundary: return kExitBoundary;
    }
    return kExitNoConverge;
  } catch (const RankDeficientUpdate& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitRankFail;
  } catch (const ParseError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ConfigError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ZeroSample& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const InvalidMatrix& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  }
}

inline int cmd_simulate(const SimulateArgs& args,
                        std::ostream& out_stream = std::cout,
                        std::ostream& err_stream = std::cerr) {
  try {
    if (args.p < 1 || args.q < 1 || args.n < 1) {
      throw ConfigError("simulate: p, q, n must be positive");
    }
    ExperimentConfig cfg;
    cfg.p = args.p;
    cfg.q = args.q;
    cfg.data_model = args.model;
    cfg.student_t_nu = args.student_t_nu;
    const SampleSet x = detail::generate_trial_data(cfg, args.n, args.seed);
    std::ostringstream text;
    write_sample_set(text, x);
    detail::emit(args.out, text.str(), out_stream);
    return kExitOk;
  } catch (const ConfigError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ParseError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const InvalidMatrix& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  }
}

inline int cmd_phase(const PhaseArgs& args,
                     std::ostream& out_stream = std::cout,
                     std::ostream& err_stream = std::cerr) {
  try {
    if (args.format != "csv") {
      throw ConfigError("phase: --format must be 'csv'");
    }
    ExperimentConfig cfg = read_experiment_config(args.config);
    if (args.seed) cfg.base_seed = *args.seed;
    if (args.k_starts) cfg.k_starts = *args.k_starts;
    if (args.tol) cfg.tol = *args.tol;
    if (args.max_iters) cfg.max_iters = *args.max_iters;
    if (cfg.k_starts < 2) throw ConfigError("phase: --starts must be >= 2");
    const std::vector<PhaseRow> rows = run_phase(cfg, args.threads);
    detail::emit(args.out, phase_csv(rows), out_stream);
    return kExitOk;
  } catch (const ConfigError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ParseError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  }
}

inline int cmd_diagnose(const DiagnoseArgs& args,
                        std::ostream& out_stream = std::cout,
                        std::ostream& err_stream = std::cerr) {
  try {
    const SampleSet x = read_sample_set(args.input);
    char buf[256];
    std::string report;
    std::snprintf(buf, sizeof(buf), "p %lld  q %lld  n %lld\n",
                  static_cast<long long>(x.p()), static_cast<long long>(x.q()),
                  static_cast<long long>(x.size()));
    report += buf;
    for (const TheoremMode mode :
         {TheoremMode::gaussian_unknown_mean, TheoremMode::gaussian_known_mean,
          TheoremMode::robust}) {
      const ThresholdVerdict v = threshold_verdict(
          static_cast<int>(x.p()), static_cast<int>(x.q()),
          static_cast<int>(x.size()), mode);
      std::snprintf(buf, sizeof(buf),
                    "threshold %-22s lower %.6g upper %.6g regime %s\n",
                    to_string(mode), v.lower, v.upper, to_string(v.regime));
      report += buf;
    }
    for (const TheoremMode mode :
         {TheoremMode::gaussian_unknown_mean, TheoremMode::robust}) {
      std::snprintf(buf, sizeof(buf), "rank_necessary_check %-21s %s\n",
                    to_string(mode),
                    rank_necessary_check(x, mode) ? "true" : "false");
      report += buf;
    }
    if (x.p() == 2 && x.q() == 2 && x.size() == 2) {
      const double d = discriminant_2x2(x[0], x[1]);
      const double scale =
          x[0].squaredNorm() * x[1].squaredNorm();
      std::snprintf(buf, sizeof(buf), "discriminant %.17g\n", d);
      report += buf;
      std::snprintf(buf, sizeof(buf), "zeta %d%s\n", zeta_2x2(x),
                    std::abs(d) <= 1e-6 * scale
                        ? "  (degenerate: |D| within 1e-6 of the quadric boundary)"
                        : "");
      report += buf;
    }
    detail::emit(args.out, report, out_stream);
    return kExitOk;
  } catch (const ParseError& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const InvalidMatrix& e) {
    err_stream << "error: " << e.what() << "\n";
    return kExitParse;
  }
}

}  // namespace kroncov
