#include <CLI11.hpp>

#include "kroncov/commands.hpp"

namespace {

kroncov::DataModel parse_model(const std::string& name, double nu) {
  if (name == "matrix_normal") return kroncov::DataModel::matrix_normal;
  if (name == "race") return kroncov::DataModel::race;
  if (name == "student_t") {
    if (!(nu > 0.0)) throw kroncov::ConfigError("--nu must be positive");
    return kroncov::DataModel::student_t;
  }
  throw kroncov::ConfigError("unknown model '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kronecker-product covariance estimation: Gaussian and robust "
               "flip-flop estimators with existence/uniqueness diagnostics"};
  app.require_subcommand(1);

  kroncov::EstimateArgs estimate;
  std::string estimator_name = "gff";
  std::string mean_name = "unknown";
  auto* est = app.add_subcommand("estimate", "Run an estimator on a sample-set file");
  est->add_option("input", estimate.input, "sample-set file")->required();
  est->add_option("--estimator", estimator_name, "gff or rff")
      ->check(CLI::IsMember({"gff", "rff"}));
  est->add_option("--mean", mean_name, "known_zero or unknown")
      ->check(CLI::IsMember({"known_zero", "unknown"}));
  est->add_option("--tol", estimate.tol, "fixed-point residual tolerance");
  est->add_option("--max-iters", estimate.max_iters, "iteration cap (0 = default)");
  est->add_option("--out", estimate.out, "output record path (default stdout)");
  est->add_option("--format", estimate.format, "output format (record)");

  kroncov::SimulateArgs simulate;
  std::string model_name = "matrix_normal";
  auto* sim = app.add_subcommand("simulate", "Emit a synthetic sample-set file");
  sim->add_option("--p", simulate.p, "row dimension")->required();
  sim->add_option("--q", simulate.q, "column dimension")->required();
  sim->add_option("--n", simulate.n, "sample count")->required();
  sim->add_option("--model", model_name, "matrix_normal, race or student_t")
      ->check(CLI::IsMember({"matrix_normal", "race", "student_t"}));
  sim->add_option("--nu", simulate.student_t_nu, "student-t degrees of freedom");
  sim->add_option("--seed", simulate.seed, "base seed");
  sim->add_option("--out", simulate.out, "output path (default stdout)");

  kroncov::PhaseArgs phase;
  std::uint64_t phase_seed = 0;
  int phase_starts = 0;
  double phase_tol = 0.0;
  int phase_max_iters = 0;
  auto* ph = app.add_subcommand("phase", "Monte Carlo phase diagram over n");
  ph->add_option("config", phase.config, "experiment config (JSON)")->required();
  ph->add_option("--out", phase.out, "output CSV path (default stdout)");
  ph->add_option("--threads", phase.threads, "worker threads");
  ph->add_option("--format", phase.format, "output format (csv)");
  auto* ph_seed = ph->add_option("--seed", phase_seed, "override base_seed");
  auto* ph_starts = ph->add_option("--starts", phase_starts, "override k_starts");
  auto* ph_tol = ph->add_option("--tol", phase_tol, "override tol");
  auto* ph_iters = ph->add_option("--max-iters", phase_max_iters, "override max_iters");

  kroncov::DiagnoseArgs diagnose;
  auto* diag = app.add_subcommand("diagnose", "Threshold and rank diagnostics for a file");
  diag->add_option("input", diagnose.input, "sample-set file")->required();
  diag->add_option("--out", diagnose.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kroncov::kExitParse;
  }

  try {
    if (est->parsed()) {
      estimate.estimator = estimator_name == "gff" ? kroncov::EstimatorTag::gff
                                                   : kroncov::EstimatorTag::rff;
      estimate.mean_mode = mean_name == "unknown" ? kroncov::MeanMode::unknown
                                                  : kroncov::MeanMode::known_zero;
      return kroncov::cmd_estimate(estimate);
    }
    if (sim->parsed()) {
      simulate.model = parse_model(model_name, simulate.student_t_nu);
      return kroncov::cmd_simulate(simulate);
    }
    if (ph->parsed()) {
      if (ph_seed->count() > 0) phase.seed = phase_seed;
      if (ph_starts->count() > 0) phase.k_starts = phase_starts;
      if (ph_tol->count() > 0) phase.tol = phase_tol;
      if (ph_iters->count() > 0) phase.max_iters = phase_max_iters;
      return kroncov::cmd_phase(phase);
    }
    if (diag->parsed()) {
      return kroncov::cmd_diagnose(diagnose);
    }
  } catch (const kroncov::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kroncov::kExitParse;
  }
  return kroncov::kExitParse;
}
