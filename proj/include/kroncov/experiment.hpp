#pragma once

#include <atomic>
#include <thread>

#include "kroncov/diagnostics.hpp"
#include "kroncov/io.hpp"

namespace kroncov {

enum class EstimatorTag { gff, rff };
enum class MeanMode { known_zero, unknown };
enum class DataModel { matrix_normal, race, student_t };

struct ExperimentConfig {
  int p = 2;
  int q = 2;
  std::vector<int> n_values;
  int trials = 100;
  EstimatorTag estimator = EstimatorTag::gff;
  MeanMode mean_mode = MeanMode::unknown;
  DataModel data_model = DataModel::matrix_normal;
  double student_t_nu = 3.0;
  std::uint64_t base_seed = 1;
  double tol = 1e-9;
  double cluster_tol = 1e-4;
  int max_iters = 0;  // 0 selects the estimator default
  int k_starts = 8;

  TheoremMode theorem_mode() const {
    if (estimator == EstimatorTag::rff) return TheoremMode::robust;
    return mean_mode == MeanMode::unknown ? TheoremMode::gaussian_unknown_mean
                                          : TheoremMode::gaussian_known_mean;
  }
};

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.p = j.at("p").get<int>();
    cfg.q = j.at("q").get<int>();
    cfg.n_values = j.at("n_values").get<std::vector<int>>();
    cfg.trials = j.at("trials").get<int>();
    const std::string estimator = j.at("estimator").get<std::string>();
    if (estimator == "gff") {
      cfg.estimator = EstimatorTag::gff;
    } else if (estimator == "rff") {
      cfg.estimator = EstimatorTag::rff;
    } else {
      throw ConfigError("estimator must be 'gff' or 'rff'");
    }
    const std::string mean_mode = j.at("mean_mode").get<std::string>();
    if (mean_mode == "known_zero") {
      cfg.mean_mode = MeanMode::known_zero;
    } else if (mean_mode == "unknown") {
      cfg.mean_mode = MeanMode::unknown;
    } else {
      throw ConfigError("mean_mode must be 'known_zero' or 'unknown'");
    }
    const std::string model = j.at("data_model").get<std::string>();
    if (model == "matrix_normal") {
      cfg.data_model = DataModel::matrix_normal;
    } else if (model == "race") {
      cfg.data_model = DataModel::race;
    } else if (model == "student_t") {
      cfg.data_model = DataModel::student_t;
      cfg.student_t_nu = j.at("student_t_nu").get<double>();
    } else {
      throw ConfigError("data_model must be matrix_normal, race or student_t");
    }
    cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    cfg.tol = j.value("tol", 1e-9);
    cfg.cluster_tol = j.value("cluster_tol", 1e-4);
    cfg.max_iters = j.value("max_iters", 0);
    cfg.k_starts = j.value("k_starts", 8);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (cfg.p < 1 || cfg.q < 1 || cfg.trials < 1 || cfg.k_starts < 2 ||
      cfg.n_values.empty()) {
    throw ConfigError("experiment config: counts must be positive");
  }
  for (int n : cfg.n_values) {
    if (n < 1) throw ConfigError("experiment config: n_values must be >= 1");
  }
  if (cfg.estimator == EstimatorTag::rff && cfg.mean_mode != MeanMode::known_zero) {
    throw ConfigError("experiment config: rff requires mean_mode = known_zero");
  }
  if (cfg.data_model == DataModel::student_t && !(cfg.student_t_nu > 0.0)) {
    throw ConfigError("experiment config: student_t_nu must be positive");
  }
  return cfg;
}

inline ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return parse_experiment_config(j);
}

struct PhaseRow {
  int n = 0;
  double frac_unique = 0.0;
  double frac_non_unique = 0.0;
  double frac_rank_fail = 0.0;
  double frac_inconclusive = 0.0;
  double mean_iterations = 0.0;
  Regime verdict_expected = Regime::gap;
};

enum class TrialClass { unique, non_unique, rank_fail, inconclusive };

inline TrialClass classify_trial(const UniquenessReport& report) {
  if (report.cluster_count >= 2) return TrialClass::non_unique;
  if (report.verdict == UniquenessVerdict::unique) return TrialClass::unique;
  if (report.starts_converged == 0 &&
      report.starts_rank_failed == report.starts_total) {
    return TrialClass::rank_fail;
  }
  return TrialClass::inconclusive;
}

/// Runs fn(0..count-1) on up to `threads` workers. Tasks only write to their
/// own result slots, so scheduling cannot affect the output.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int worker_count = std::min(threads, count);
  workers.reserve(static_cast<std::size_t>(worker_count));
  for (int w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : workers) t.join();
}

namespace detail {

inline SampleSet generate_trial_data(const ExperimentConfig& cfg, int n,
                                     std::uint64_t data_seed) {
  const auto p = static_cast<Eigen::Index>(cfg.p);
  const auto q = static_cast<Eigen::Index>(cfg.q);
  switch (cfg.data_model) {
    case DataModel::matrix_normal:
      return sample_matrix_normal(
          MatrixNormalParams(Eigen::MatrixXd::Zero(p, q),
                             SpdMatrix::identity(p), SpdMatrix::identity(q)),
          n, data_seed);
    case DataModel::race:
      return sample_elliptical(SpdMatrix::identity(p * q), TailModel::race, p,
                               q, n, data_seed);
    case DataModel::student_t:
      return sample_elliptical(SpdMatrix::identity(p * q),
                               TailModel::student_t, p, q, n, data_seed,
                               cfg.student_t_nu);
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

/// Phase diagram over the sample counts in the config: `trials` independent
/// multistart probes per n, classified into unique / non-unique / rank
/// failure / inconclusive. Trial seeds are base_seed ^ hash2(n, trial), so
/// every trial is individually re-runnable and the output is independent of
/// the thread count.
inline std::vector<PhaseRow> run_phase(const ExperimentConfig& cfg,
                                       int threads = 1) {
  struct Task {
    int n_index;
    int trial;
  };
  std::vector<Task> tasks;
  tasks.reserve(cfg.n_values.size() * static_cast<std::size_t>(cfg.trials));
  for (int ni = 0; ni < static_cast<int>(cfg.n_values.size()); ++ni) {
    for (int trial = 0; trial < cfg.trials; ++trial) {
      tasks.push_back(Task{ni, trial});
    }
  }
  struct TrialOutcome {
    TrialClass cls = TrialClass::inconclusive;
    double mean_iterations = 0.0;
    int converged = 0;
  };
  std::vector<TrialOutcome> outcomes(tasks.size());
  const TheoremMode mode = cfg.theorem_mode();
  parallel_for(static_cast<int>(tasks.size()), threads, [&](int ti) {
    const Task& task = tasks[static_cast<std::size_t>(ti)];
    const int n = cfg.n_values[static_cast<std::size_t>(task.n_index)];
    const std::uint64_t trial_seed =
        cfg.base_seed ^ hash2(static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(task.trial));
    const SampleSet data =
        detail::generate_trial_data(cfg, n, hash2(trial_seed, 0));
    MultistartOptions opts;
    opts.k_starts = cfg.k_starts;
    opts.seed = hash2(trial_seed, 1);
    opts.tol = cfg.tol;
    opts.cluster_tol = cfg.cluster_tol;
    opts.max_iters = cfg.max_iters;
    const UniquenessReport report = multistart_uniqueness(data, mode, opts);
    TrialOutcome& out = outcomes[static_cast<std::size_t>(ti)];
    out.cls = classify_trial(report);
    out.mean_iterations = report.mean_converged_iterations;
    out.converged = report.starts_converged;
  });

  std::vector<PhaseRow> rows;
  rows.reserve(cfg.n_values.size());
  for (int ni = 0; ni < static_cast<int>(cfg.n_values.size()); ++ni) {
    const int n = cfg.n_values[static_cast<std::size_t>(ni)];
    PhaseRow row;
    row.n = n;
    row.verdict_expected = threshold_verdict(cfg.p, cfg.q, n, mode).regime;
    int counts[4] = {0, 0, 0, 0};
    double iter_sum = 0.0;
    int iter_trials = 0;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      if (tasks[ti].n_index != ni) continue;
      const TrialOutcome& out = outcomes[ti];
      counts[static_cast<int>(out.cls)]++;
      if (out.converged > 0) {
        iter_sum += out.mean_iterations;
        ++iter_trials;
      }
    }
    const double trials = static_cast<double>(cfg.trials);
    row.frac_unique = counts[static_cast<int>(TrialClass::unique)] / trials;
    row.frac_non_unique =
        counts[static_cast<int>(TrialClass::non_unique)] / trials;
    row.frac_rank_fail =
        counts[static_cast<int>(TrialClass::rank_fail)] / trials;
    row.frac_inconclusive =
        counts[static_cast<int>(TrialClass::inconclusive)] / trials;
    row.mean_iterations = iter_trials > 0 ? iter_sum / iter_trials : 0.0;
    rows.push_back(row);
  }
  return rows;
}

inline std::string phase_csv(const std::vector<PhaseRow>& rows) {
  std::string out =
      "n,frac_unique,frac_non_unique,frac_rank_fail,frac_inconclusive,"
      "mean_iterations,verdict_expected\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.3f,%s\n", row.n,
                  row.frac_unique, row.frac_non_unique, row.frac_rank_fail,
                  row.frac_inconclusive, row.mean_iterations,
                  to_string(row.verdict_expected));
    out += buf;
  }
  return out;
}

}  // namespace kroncov
