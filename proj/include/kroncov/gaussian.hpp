#pragma once

#include <optional>

#include "kroncov/estimation.hpp"

namespace kroncov {

/// Matrix-normal negative log-likelihood (up to an additive constant):
///   (1/n) sum_i tr(P^{-1} (X_i - M) Q^{-1} (X_i - M)^T)
///     + q logdet(P) + p logdet(Q).
/// The same objective can be written in the inverse parameters, with
/// (A, B) = (P^{-1}, Q^{-1}) as the variables and a flipped logdet sign;
/// that form has identical extrema and is what boundary_probe_2x2 walks.
/// The estimators iterate on (P, Q) directly.
inline double gaussian_nll(const Eigen::MatrixXd& mean,
                           const KroneckerPair& pair, const SampleSet& x) {
  if (mean.rows() != x.p() || mean.cols() != x.q() ||
      pair.p_dim() != x.p() || pair.q_dim() != x.q()) {
    throw DimensionMismatch("gaussian_nll: inconsistent dimensions");
  }
  const Eigen::LLT<Eigen::MatrixXd> p_llt(pair.p_factor().mat());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  double trace_term = 0.0;
  for (const auto& sample : x.samples()) {
    const Eigen::MatrixXd y = sample - mean;
    // tr(P^{-1} Y Q^{-1} Y^T) = <P^{-1} Y, Y Q^{-1}>
    trace_term += (p_llt.solve(y).array() *
                   q_llt.solve(y.transpose()).transpose().array())
                      .sum();
  }
  trace_term /= static_cast<double>(x.size());
  return trace_term + static_cast<double>(x.q()) * logdet(pair.p_factor()) +
         static_cast<double>(x.p()) * logdet(pair.q_factor());
}

/// Raw first-order-condition right-hand sides evaluated at the given pair:
///   P~ = (1/qn) sum Y_i Q^{-1} Y_i^T,   Q~ = (1/pn) sum Y_i^T P^{-1} Y_i.
/// Samples are assumed centered.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gff_update_rhs(
    const KroneckerPair& pair, const SampleSet& y) {
  const Eigen::Index p = y.p();
  const Eigen::Index q = y.q();
  const double n = static_cast<double>(y.size());
  const Eigen::LLT<Eigen::MatrixXd> p_llt(pair.p_factor().mat());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  Eigen::MatrixXd rhs_p = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd rhs_q = Eigen::MatrixXd::Zero(q, q);
  for (const auto& sample : y.samples()) {
    rhs_p.noalias() += sample * q_llt.solve(sample.transpose());
    rhs_q.noalias() += sample.transpose() * p_llt.solve(sample);
  }
  rhs_p = symmetrized(rhs_p / (static_cast<double>(q) * n));
  rhs_q = symmetrized(rhs_q / (static_cast<double>(p) * n));
  return {std::move(rhs_p), std::move(rhs_q)};
}

/// One flip-flop sweep on centered samples: exact minimization over P with Q
/// held fixed, then over Q with the fresh P, followed by the
/// product-preserving spectral normalization (P, Q) -> (P/|P|_2, |P|_2 Q).
/// Sequential half-updates keep the objective non-increasing per sweep.
inline KroneckerPair gff_step(const KroneckerPair& pair, const SampleSet& y) {
  const Eigen::Index p = y.p();
  const Eigen::Index q = y.q();
  const double n = static_cast<double>(y.size());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  Eigen::MatrixXd p_new = Eigen::MatrixXd::Zero(p, p);
  for (const auto& sample : y.samples()) {
    p_new.noalias() += sample * q_llt.solve(sample.transpose());
  }
  p_new = symmetrized(p_new / (static_cast<double>(q) * n));
  detail::check_full_rank(p_new, "row-factor");

  const Eigen::LLT<Eigen::MatrixXd> p_llt(p_new);
  Eigen::MatrixXd q_new = Eigen::MatrixXd::Zero(q, q);
  for (const auto& sample : y.samples()) {
    q_new.noalias() += sample.transpose() * p_llt.solve(sample);
  }
  q_new = symmetrized(q_new / (static_cast<double>(p) * n));
  detail::check_full_rank(q_new, "column-factor");

  const double s = sym_lambda_max(p_new);
  return KroneckerPair(SpdMatrix(p_new / s), SpdMatrix(s * q_new),
                       Normalization::spectral_p);
}

/// Relative fixed-point residual of the first-order conditions at the pair,
/// with the scale ambiguity projected out (the RHS pair is rescaled onto the
/// pair's normalization slice before comparing).
inline double gff_residual(const KroneckerPair& pair, const SampleSet& y) {
  auto [rhs_p, rhs_q] = gff_update_rhs(pair, y);
  return detail::pair_residual(pair, std::move(rhs_p), std::move(rhs_q));
}

/// Gaussian flip-flop estimation. When no known mean is supplied, the mean
/// is the sample average (the likelihood decouples in the mean parameter)
/// and the iteration runs on the centered samples.
inline EstimationResult gff_estimate(
    const SampleSet& x, const KroneckerPair& init,
    const std::optional<Eigen::MatrixXd>& known_mean = std::nullopt,
    double tol = kGffTol, int max_iters = kGffMaxIters) {
  const Eigen::MatrixXd mean = known_mean ? *known_mean : sample_mean(x);
  if (mean.rows() != x.p() || mean.cols() != x.q()) {
    throw DimensionMismatch("gff_estimate: mean dimensions differ from samples");
  }
  const SampleSet y = centered(x, mean);
  KroneckerPair pair = KroneckerPair::normalized(
      init.p_factor(), init.q_factor(), Normalization::spectral_p);

  std::vector<double> trace;
  trace.reserve(64);
  double residual = std::numeric_limits<double>::infinity();
  TerminationStatus status = TerminationStatus::max_iters;
  int iterations = 0;
  for (int it = 1; it <= max_iters; ++it) {
    pair = gff_step(pair, y);
    iterations = it;
    trace.push_back(gaussian_nll(mean, pair, x));
    residual = gff_residual(pair, y);
    if (residual <= tol) {
      status = TerminationStatus::converged;
      break;
    }
    if (detail::hits_boundary(pair)) {
      status = TerminationStatus::diverged_to_boundary;
      break;
    }
  }
  return EstimationResult{std::move(pair), mean, std::move(trace), residual,
                          status, iterations};
}

}  // namespace kroncov
