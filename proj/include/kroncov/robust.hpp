#pragma once

#include "kroncov/estimation.hpp"

namespace kroncov {

namespace detail {

inline void require_no_zero_samples(const SampleSet& x) {
  for (const auto& s : x.samples()) {
    if (s.norm() == 0.0) {
      throw ZeroSample("robust estimator: zero sample has undefined "
                       "log-trace term");
    }
  }
}

}  // namespace detail

/// Kronecker-constrained Tyler objective:
///   (1/pq) (q logdet P + p logdet Q)
///     + (1/n) sum_i ln tr(P^{-1} X_i Q^{-1} X_i^T).
/// Invariant under P -> cP, Q -> cQ and under rescaling individual samples.
inline double robust_nll(const KroneckerPair& pair, const SampleSet& x) {
  if (pair.p_dim() != x.p() || pair.q_dim() != x.q()) {
    throw DimensionMismatch("robust_nll: inconsistent dimensions");
  }
  detail::require_no_zero_samples(x);
  const Eigen::LLT<Eigen::MatrixXd> p_llt(pair.p_factor().mat());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  double log_trace_sum = 0.0;
  for (const auto& sample : x.samples()) {
    const double w = (p_llt.solve(sample).array() *
                      q_llt.solve(sample.transpose()).transpose().array())
                         .sum();
    if (!(w > 0.0)) {
      throw ZeroSample("robust_nll: nonpositive trace term");
    }
    log_trace_sum += std::log(w);
  }
  const double dim = static_cast<double>(x.p() * x.q());
  const double logdet_term =
      (static_cast<double>(x.q()) * logdet(pair.p_factor()) +
       static_cast<double>(x.p()) * logdet(pair.q_factor())) /
      dim;
  return logdet_term + log_trace_sum / static_cast<double>(x.size());
}

/// Tyler-weighted critical-point right-hand sides at the given pair:
///   P~ = (1/qn) sum X_i Q^{-1} X_i^T / w_i,
///   Q~ = (1/pn) sum X_i^T P^{-1} X_i / w_i,
/// with w_i = tr(P^{-1} X_i Q^{-1} X_i^T).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> rff_update_rhs(
    const KroneckerPair& pair, const SampleSet& x) {
  detail::require_no_zero_samples(x);
  const Eigen::Index p = x.p();
  const Eigen::Index q = x.q();
  const double n = static_cast<double>(x.size());
  const Eigen::LLT<Eigen::MatrixXd> p_llt(pair.p_factor().mat());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  Eigen::MatrixXd rhs_p = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd rhs_q = Eigen::MatrixXd::Zero(q, q);
  for (const auto& sample : x.samples()) {
    const Eigen::MatrixXd xq = q_llt.solve(sample.transpose()).transpose();
    const Eigen::MatrixXd px = p_llt.solve(sample);
    const double w = (px.array() * xq.array()).sum();
    if (!(w > 0.0)) throw ZeroSample("rff update: nonpositive weight");
    rhs_p.noalias() += (xq * sample.transpose()) / w;
    rhs_q.noalias() += (sample.transpose() * px) / w;
  }
  rhs_p = symmetrized(rhs_p / (static_cast<double>(q) * n));
  rhs_q = symmetrized(rhs_q / (static_cast<double>(p) * n));
  return {std::move(rhs_p), std::move(rhs_q)};
}

/// One robust flip-flop sweep: P-side Tyler-weighted update with weights at
/// the incoming pair, spectral normalization, then the Q-side update with
/// weights refreshed at the new P. Each half-step is a majorize-minimize
/// move, so the objective is non-increasing per sweep.
inline KroneckerPair rff_step(const KroneckerPair& pair, const SampleSet& x) {
  detail::require_no_zero_samples(x);
  const Eigen::Index p = x.p();
  const Eigen::Index q = x.q();
  const double n = static_cast<double>(x.size());
  const Eigen::LLT<Eigen::MatrixXd> q_llt(pair.q_factor().mat());
  const Eigen::LLT<Eigen::MatrixXd> p_llt(pair.p_factor().mat());
  Eigen::MatrixXd p_new = Eigen::MatrixXd::Zero(p, p);
  for (const auto& sample : x.samples()) {
    const Eigen::MatrixXd xq = q_llt.solve(sample.transpose()).transpose();
    const double w = (p_llt.solve(sample).array() * xq.array()).sum();
    if (!(w > 0.0)) throw ZeroSample("rff_step: nonpositive weight");
    p_new.noalias() += (xq * sample.transpose()) / w;
  }
  p_new = symmetrized(p_new / (static_cast<double>(q) * n));
  detail::check_full_rank(p_new, "row-factor");
  p_new /= sym_lambda_max(p_new);

  const Eigen::LLT<Eigen::MatrixXd> p_new_llt(p_new);
  Eigen::MatrixXd q_new = Eigen::MatrixXd::Zero(q, q);
  for (const auto& sample : x.samples()) {
    const Eigen::MatrixXd px = p_new_llt.solve(sample);
    const double w = (px.array() *
                      q_llt.solve(sample.transpose()).transpose().array())
                         .sum();
    if (!(w > 0.0)) throw ZeroSample("rff_step: nonpositive weight");
    q_new.noalias() += (sample.transpose() * px) / w;
  }
  q_new = symmetrized(q_new / (static_cast<double>(p) * n));
  detail::check_full_rank(q_new, "column-factor");
  q_new /= sym_lambda_max(q_new);

  return KroneckerPair(SpdMatrix(std::move(p_new)), SpdMatrix(std::move(q_new)),
                       Normalization::spectral_both);
}

/// Fixed-point residual of the critical-point system after projecting both
/// factors onto the double spectral normalization (uniqueness holds only on
/// the scale quotient, so raw gaps would be scale polluted).
inline double rff_residual(const KroneckerPair& pair, const SampleSet& x) {
  auto [rhs_p, rhs_q] = rff_update_rhs(pair, x);
  return detail::pair_residual(pair, std::move(rhs_p), std::move(rhs_q));
}

/// Robust flip-flop estimation; the mean is assumed known and already
/// subtracted from the samples.
inline EstimationResult rff_estimate(const SampleSet& x,
                                     const KroneckerPair& init,
                                     double tol = kRffTol,
                                     int max_iters = kRffMaxIters) {
  detail::require_no_zero_samples(x);
  KroneckerPair pair = KroneckerPair::normalized(
      init.p_factor(), init.q_factor(), Normalization::spectral_both);
  std::vector<double> trace;
  trace.reserve(64);
  double residual = std::numeric_limits<double>::infinity();
  TerminationStatus status = TerminationStatus::max_iters;
  int iterations = 0;
  for (int it = 1; it <= max_iters; ++it) {
    pair = rff_step(pair, x);
    iterations = it;
    trace.push_back(robust_nll(pair, x));
    residual = rff_residual(pair, x);
    if (residual <= tol) {
      status = TerminationStatus::converged;
      break;
    }
    if (detail::hits_boundary(pair)) {
      status = TerminationStatus::diverged_to_boundary;
      break;
    }
  }
  return EstimationResult{std::move(pair),
                          Eigen::MatrixXd::Zero(x.p(), x.q()),
                          std::move(trace),
                          residual,
                          status,
                          iterations};
}

struct TylerResult {
  SpdMatrix shape;  // trace-normalized to tr(T) = pq
  double residual;
  int iterations;
  bool converged;
};

/// Unconstrained Tyler fixed point on the vectorized samples,
///   T = (pq/n) sum v_i v_i^T / (v_i^T T^{-1} v_i),
/// iterated with trace renormalization to tr(T) = pq.
inline TylerResult tyler_unconstrained(const SampleSet& x, double tol = kRffTol,
                                       int max_iters = kRffMaxIters) {
  const Eigen::Index d = x.p() * x.q();
  const Eigen::Index n = x.size();
  if (n <= d) {
    throw RankDeficientUpdate("tyler_unconstrained: needs n > pq samples");
  }
  detail::require_no_zero_samples(x);
  std::vector<Eigen::VectorXd> vs;
  vs.reserve(static_cast<std::size_t>(n));
  for (const auto& s : x.samples()) vs.push_back(vec_rowmajor(s));

  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(d, d);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (it = 1; it <= max_iters; ++it) {
    const Eigen::LLT<Eigen::MatrixXd> llt(t);
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : vs) {
      const double w = v.dot(llt.solve(v));
      if (!(w > 0.0)) throw ZeroSample("tyler_unconstrained: nonpositive weight");
      next.noalias() += (v * v.transpose()) / w;
    }
    next = symmetrized(next * (static_cast<double>(d) / static_cast<double>(n)));
    detail::check_full_rank(next, "scatter");
    next *= static_cast<double>(d) / next.trace();
    residual = (next - t).norm() / t.norm();
    t = std::move(next);
    if (residual <= tol) break;
  }
  const bool converged = residual <= tol;
  return TylerResult{SpdMatrix(std::move(t)), residual,
                     std::min(it, max_iters), converged};
}

}  // namespace kroncov
