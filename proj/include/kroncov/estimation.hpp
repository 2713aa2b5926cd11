#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "kroncov/linalg.hpp"
#include "kroncov/sampling.hpp"

namespace kroncov {

/// Convention resolving the scale ambiguity (P, Q) ~ (cP, Q/c).
enum class Normalization { spectral_p, spectral_both, none };

inline const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::spectral_p: return "spectral_p";
    case Normalization::spectral_both: return "spectral_both";
    case Normalization::none: return "none";
  }
  return "?";
}

/// An update right-hand side came out rank deficient: the sample count is
/// below the necessary existence threshold for the selected estimator.
struct RankDeficientUpdate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sample with zero Frobenius norm reached the robust objective, whose
/// per-sample log-trace term is undefined there.
struct ZeroSample : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kRankEps = 1e-10;       // structural rank-deficiency cut
inline constexpr double kConditionMax = 1e12;   // boundary-divergence guard
inline constexpr double kGffTol = 1e-9;
inline constexpr int kGffMaxIters = 10000;
inline constexpr double kRffTol = 1e-9;
inline constexpr int kRffMaxIters = 20000;

/// A Kronecker factor pair with an explicit normalization convention; the
/// declared convention is validated to 1e-10 at construction.
class KroneckerPair {
 public:
  static constexpr double kNormalizationTol = 1e-10;

  KroneckerPair(SpdMatrix p, SpdMatrix q, Normalization normalization)
      : p_(std::move(p)), q_(std::move(q)), normalization_(normalization) {
    const double np = spectral_norm(p_);
    const double nq = spectral_norm(q_);
    const bool p_ok = std::abs(np - 1.0) <= kNormalizationTol;
    const bool q_ok = std::abs(nq - 1.0) <= kNormalizationTol;
    switch (normalization_) {
      case Normalization::spectral_p:
        if (!p_ok) throw InvalidMatrix("KroneckerPair: |P|_2 = 1 violated");
        break;
      case Normalization::spectral_both:
        if (!p_ok || !q_ok) {
          throw InvalidMatrix("KroneckerPair: |P|_2 = |Q|_2 = 1 violated");
        }
        break;
      case Normalization::none:
        break;
    }
  }

  /// Rescales the factors to satisfy the requested convention. spectral_p
  /// preserves the product P (x) Q; spectral_both fixes only its direction.
  static KroneckerPair normalized(const SpdMatrix& p, const SpdMatrix& q,
                                  Normalization normalization) {
    const double np = spectral_norm(p);
    switch (normalization) {
      case Normalization::spectral_p:
        return KroneckerPair(SpdMatrix(p.mat() / np), SpdMatrix(np * q.mat()),
                             normalization);
      case Normalization::spectral_both: {
        const double nq = spectral_norm(q);
        return KroneckerPair(SpdMatrix(p.mat() / np), SpdMatrix(q.mat() / nq),
                             normalization);
      }
      case Normalization::none:
        return KroneckerPair(p, q, normalization);
    }
    throw std::logic_error("unreachable");
  }

  static KroneckerPair identity(Eigen::Index p_dim, Eigen::Index q_dim,
                                Normalization normalization) {
    return KroneckerPair(SpdMatrix::identity(p_dim),
                         SpdMatrix::identity(q_dim), normalization);
  }

  const SpdMatrix& p_factor() const { return p_; }
  const SpdMatrix& q_factor() const { return q_; }
  Normalization normalization() const { return normalization_; }
  Eigen::Index p_dim() const { return p_.dim(); }
  Eigen::Index q_dim() const { return q_.dim(); }

  /// Full pq x pq product; intended for tests and diagnostics only.
  SpdMatrix product() const { return kron(p_, q_); }

 private:
  SpdMatrix p_, q_;
  Normalization normalization_;
};

enum class TerminationStatus { converged, max_iters, diverged_to_boundary };

inline const char* to_string(TerminationStatus s) {
  switch (s) {
    case TerminationStatus::converged: return "converged";
    case TerminationStatus::max_iters: return "max_iters";
    case TerminationStatus::diverged_to_boundary: return "diverged_to_boundary";
  }
  return "?";
}

struct EstimationResult {
  KroneckerPair pair;
  Eigen::MatrixXd mean;
  std::vector<double> objective_trace;  // one value per completed sweep
  double residual;                      // fixed-point residual at termination
  TerminationStatus status;
  int iterations;
};

namespace detail {

/// Rescales the raw update pair (pt, qt) onto the scale slice of `like`,
/// preserving the product for spectral_p / none and dropping it for
/// spectral_both (where the objective is scale free anyway).
inline void rescale_like(Eigen::MatrixXd& pt, Eigen::MatrixXd& qt,
                         const KroneckerPair& like) {
  switch (like.normalization()) {
    case Normalization::spectral_p: {
      const double s = sym_lambda_max(pt);
      pt /= s;
      qt *= s;
      break;
    }
    case Normalization::spectral_both: {
      pt /= sym_lambda_max(pt);
      qt /= sym_lambda_max(qt);
      break;
    }
    case Normalization::none: {
      const double c = spectral_norm(like.p_factor()) / sym_lambda_max(pt);
      pt *= c;
      qt /= c;
      break;
    }
  }
}

inline double pair_residual(const KroneckerPair& pair, Eigen::MatrixXd rhs_p,
                            Eigen::MatrixXd rhs_q) {
  rescale_like(rhs_p, rhs_q, pair);
  const double rp = (pair.p_factor().mat() - rhs_p).norm() /
                    pair.p_factor().mat().norm();
  const double rq = (pair.q_factor().mat() - rhs_q).norm() /
                    pair.q_factor().mat().norm();
  return std::max(rp, rq);
}

inline void check_full_rank(const Eigen::MatrixXd& rhs, const char* side) {
  const Eigen::VectorXd ev = sym_eigenvalues(rhs);
  const double lmax = ev(ev.size() - 1);
  if (!(lmax > 0.0) || ev(0) <= kRankEps * lmax) {
    throw RankDeficientUpdate(std::string(side) +
                              " update is rank deficient: sample count is "
                              "below the existence threshold");
  }
}

inline bool hits_boundary(const KroneckerPair& pair) {
  return condition_number(pair.p_factor().mat()) > kConditionMax ||
         condition_number(pair.q_factor().mat()) > kConditionMax;
}

}  // namespace detail

}  // namespace kroncov
