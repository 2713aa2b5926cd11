#pragma once

#include <algorithm>
#include <optional>

#include "kroncov/gaussian.hpp"
#include "kroncov/robust.hpp"

namespace kroncov {

enum class Regime { no_unique_minimum, gap, unique_minimum };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::no_unique_minimum: return "no_unique_minimum";
    case Regime::gap: return "gap";
    case Regime::unique_minimum: return "unique_minimum";
  }
  return "?";
}

enum class TheoremMode { gaussian_unknown_mean, gaussian_known_mean, robust };

inline const char* to_string(TheoremMode m) {
  switch (m) {
    case TheoremMode::gaussian_unknown_mean: return "gaussian_unknown_mean";
    case TheoremMode::gaussian_known_mean: return "gaussian_known_mean";
    case TheoremMode::robust: return "robust";
  }
  return "?";
}

/// Existence/uniqueness regime for a sample count: below `lower` no unique
/// minimum exists, above `upper` a unique minimum exists almost surely, and
/// in between neither outcome is guaranteed.
struct ThresholdVerdict {
  Regime regime;
  double lower;
  double upper;
  TheoremMode theorem;
};

inline ThresholdVerdict threshold_verdict(int p, int q, int n,
                                          TheoremMode mode) {
  if (p < 1 || q < 1 || n < 1) {
    throw InvalidMatrix("threshold_verdict: p, q, n must be positive");
  }
  const double ratio_max =
      std::max(static_cast<double>(p) / q, static_cast<double>(q) / p);
  const double ratio_sum =
      static_cast<double>(p) / q + static_cast<double>(q) / p;
  double lower = 0.0, upper = 0.0;
  switch (mode) {
    case TheoremMode::gaussian_unknown_mean:
      lower = ratio_max + 1.0;
      upper = ratio_sum + 1.0;
      break;
    case TheoremMode::gaussian_known_mean:
      lower = ratio_max;
      upper = ratio_sum;
      break;
    case TheoremMode::robust:
      lower = ratio_max;
      upper = ratio_max;
      break;
  }
  Regime regime = Regime::gap;
  if (static_cast<double>(n) < lower) {
    regime = Regime::no_unique_minimum;
  } else if (static_cast<double>(n) > upper) {
    regime = Regime::unique_minimum;
  }
  return ThresholdVerdict{regime, lower, upper, mode};
}

/// Discriminant of the quadric deciding whether some direction t makes
/// X1 t and X2 t parallel. With X1 = [x y; u v], X2 = [a b; c d]:
///   D = (|x b; u d| + |y a; v c|)^2 - 4 |x a; u c| |y b; v d|.
/// A witness direction exists iff D >= 0.
inline double discriminant_2x2(const Eigen::Matrix2d& x1,
                               const Eigen::Matrix2d& x2) {
  const double x = x1(0, 0), y = x1(0, 1), u = x1(1, 0), v = x1(1, 1);
  const double a = x2(0, 0), b = x2(0, 1), c = x2(1, 0), d = x2(1, 1);
  const double mixed = (x * d - u * b) + (y * c - v * a);
  return mixed * mixed - 4.0 * (x * c - u * a) * (y * d - v * b);
}

/// Indicator for two 2x2 samples: 1 when D >= 0 (a shared direction with
/// collinear images exists, no unique minimum), 2 when D < 0 (unique
/// minimum). For n = 1 the indicator equals 1 almost surely and for n > 2 it
/// equals 2 almost surely; those cases are constants, not computed here.
inline constexpr int kZetaSingleSample = 1;
inline constexpr int kZetaAboveTwoSamples = 2;

inline int zeta_2x2(const SampleSet& x) {
  if (x.p() != 2 || x.q() != 2 || x.size() != 2) {
    throw DimensionMismatch("zeta_2x2: needs exactly two 2x2 samples");
  }
  const double d = discriminant_2x2(x[0], x[1]);
  return d >= 0.0 ? 1 : 2;
}

namespace detail {

/// Largest pairwise image-collinearity defect for the direction t(theta).
inline double collinearity_defect(const SampleSet& x, double theta) {
  const Eigen::Vector2d t(std::cos(theta), std::sin(theta));
  double worst = 0.0;
  const auto n = x.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d vi = x[i] * t;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::Vector2d vj = x[j] * t;
      worst = std::max(worst, std::abs(vi.x() * vj.y() - vi.y() * vj.x()));
    }
  }
  return worst;
}

}  // namespace detail

/// Brute-force search for a unit direction t whose images X_i t are pairwise
/// collinear: 1e4-point grid over theta in [0, pi) plus local refinement.
/// Returns t when the refined defect is at most 1e-9. Kept independent of
/// discriminant_2x2 so the two classify the same event by different routes.
inline std::optional<Eigen::Vector2d> collinearity_oracle(const SampleSet& x) {
  if (x.p() != 2 || x.q() != 2) {
    throw DimensionMismatch("collinearity_oracle: needs 2x2 samples");
  }
  constexpr int kGrid = 10000;
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kAccept = 1e-9;
  double best_theta = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double theta = kPi * k / kGrid;
    const double h = detail::collinearity_defect(x, theta);
    if (h < best) {
      best = h;
      best_theta = theta;
    }
  }
  // Shrinking local grids around the best coarse angle.
  double lo = best_theta - kPi / kGrid;
  double hi = best_theta + kPi / kGrid;
  for (int round = 0; round < 10; ++round) {
    constexpr int kLocal = 32;
    double round_best = best;
    double round_theta = best_theta;
    for (int k = 0; k <= kLocal; ++k) {
      const double theta = lo + (hi - lo) * k / kLocal;
      const double h = detail::collinearity_defect(x, theta);
      if (h < round_best) {
        round_best = h;
        round_theta = theta;
      }
    }
    best = round_best;
    best_theta = round_theta;
    const double width = (hi - lo) / 8.0;
    lo = best_theta - width;
    hi = best_theta + width;
  }
  if (best <= kAccept) {
    return Eigen::Vector2d(std::cos(best_theta), std::sin(best_theta));
  }
  return std::nullopt;
}

/// Necessary condition for any fixed point to exist: both flip-flop update
/// right-hand sides evaluated at (I, I) must be full rank. For the
/// unknown-mean Gaussian mode the samples are centered first, matching what
/// the estimator actually iterates on.
inline bool rank_necessary_check(const SampleSet& x, TheoremMode mode) {
  const SampleSet* data = &x;
  std::optional<SampleSet> centered_data;
  if (mode == TheoremMode::gaussian_unknown_mean) {
    centered_data = centered(x, sample_mean(x));
    data = &*centered_data;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(x.p(), x.p());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(x.q(), x.q());
  for (const auto& s : data->samples()) {
    a.noalias() += s * s.transpose();
    b.noalias() += s.transpose() * s;
  }
  const auto full = [](const Eigen::MatrixXd& m) {
    const Eigen::VectorXd ev = sym_eigenvalues(m);
    const double lmax = ev(ev.size() - 1);
    return lmax > 0.0 && ev(0) > kRankEps * lmax;
  };
  return full(a) && full(b);
}

enum class UniquenessVerdict { unique, non_unique, inconclusive };

inline const char* to_string(UniquenessVerdict v) {
  switch (v) {
    case UniquenessVerdict::unique: return "unique";
    case UniquenessVerdict::non_unique: return "non_unique";
    case UniquenessVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct UniquenessReport {
  std::vector<std::pair<KroneckerPair, double>> limits;  // converged limits
  std::vector<EstimationResult> runs;  // every start that produced a result
  int cluster_count = 0;
  double max_objective_spread = 0.0;
  double max_limit_diameter = 0.0;
  UniquenessVerdict verdict = UniquenessVerdict::inconclusive;
  int starts_total = 0;
  int starts_converged = 0;
  int starts_rank_failed = 0;
  int starts_boundary = 0;
  int starts_max_iters = 0;
  double mean_converged_iterations = 0.0;
};

struct MultistartOptions {
  int k_starts = 8;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  double cluster_tol = 1e-4;
  int max_iters = 0;  // 0 selects the estimator default
};

namespace detail {

inline SpdMatrix random_spd(Rng& rng, Eigen::Index d) {
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  }
  return SpdMatrix(Eigen::MatrixXd(a.transpose() * a +
                                   1e-3 * Eigen::MatrixXd::Identity(d, d)));
}

/// Scale-free distance between factor pairs: Frobenius distance of the
/// unit-normalized Kronecker products.
inline double quotient_distance(const KroneckerPair& a,
                                const KroneckerPair& b) {
  Eigen::MatrixXd ka = kron_dense(a.p_factor().mat(), a.q_factor().mat());
  Eigen::MatrixXd kb = kron_dense(b.p_factor().mat(), b.q_factor().mat());
  ka /= ka.norm();
  kb /= kb.norm();
  return (ka - kb).norm();
}

}  // namespace detail

/// Empirical uniqueness probe: runs the selected estimator from k random
/// well-conditioned inits and clusters the converged limits on the scale
/// quotient. Per-start estimator failures are recorded, not fatal.
inline UniquenessReport multistart_uniqueness(const SampleSet& x,
                                              TheoremMode mode,
                                              const MultistartOptions& opts) {
  if (opts.k_starts < 2) {
    throw InvalidMatrix("multistart_uniqueness: k_starts must be >= 2");
  }
  UniquenessReport report;
  report.starts_total = opts.k_starts;
  const int max_iters =
      opts.max_iters > 0 ? opts.max_iters
                         : (mode == TheoremMode::robust ? kRffMaxIters
                                                        : kGffMaxIters);
  double iter_sum = 0.0;
  for (int s = 0; s < opts.k_starts; ++s) {
    Rng rng = Rng::stream(opts.seed, static_cast<std::uint64_t>(s));
    const SpdMatrix p0 = detail::random_spd(rng, x.p());
    const SpdMatrix q0 = detail::random_spd(rng, x.q());
    try {
      EstimationResult result = [&] {
        switch (mode) {
          case TheoremMode::gaussian_unknown_mean:
            return gff_estimate(
                x, KroneckerPair::normalized(p0, q0, Normalization::spectral_p),
                std::nullopt, opts.tol, max_iters);
          case TheoremMode::gaussian_known_mean:
            return gff_estimate(
                x, KroneckerPair::normalized(p0, q0, Normalization::spectral_p),
                Eigen::MatrixXd::Zero(x.p(), x.q()), opts.tol, max_iters);
          case TheoremMode::robust:
            return rff_estimate(
                x,
                KroneckerPair::normalized(p0, q0, Normalization::spectral_both),
                opts.tol, max_iters);
        }
        throw std::logic_error("unreachable");
      }();
      switch (result.status) {
        case TerminationStatus::converged: {
          const double objective = result.objective_trace.empty()
                                       ? 0.0
                                       : result.objective_trace.back();
          report.limits.emplace_back(result.pair, objective);
          ++report.starts_converged;
          iter_sum += result.iterations;
          break;
        }
        case TerminationStatus::diverged_to_boundary:
          ++report.starts_boundary;
          break;
        case TerminationStatus::max_iters:
          ++report.starts_max_iters;
          break;
      }
      report.runs.push_back(std::move(result));
    } catch (const RankDeficientUpdate&) {
      ++report.starts_rank_failed;
    } catch (const ZeroSample&) {
      ++report.starts_rank_failed;
    }
  }

  // Single-link clustering in start order, so the outcome is deterministic.
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < static_cast<int>(report.limits.size()); ++i) {
    bool placed = false;
    for (auto& cluster : clusters) {
      for (int j : cluster) {
        if (detail::quotient_distance(report.limits[i].first,
                                      report.limits[j].first) <=
            opts.cluster_tol) {
          cluster.push_back(i);
          placed = true;
          break;
        }
      }
      if (placed) break;
    }
    if (!placed) clusters.push_back({i});
  }
  report.cluster_count = static_cast<int>(clusters.size());
  if (!report.limits.empty()) {
    double lo = report.limits[0].second, hi = report.limits[0].second;
    for (const auto& [pair, obj] : report.limits) {
      lo = std::min(lo, obj);
      hi = std::max(hi, obj);
    }
    report.max_objective_spread = hi - lo;
    for (std::size_t i = 0; i < report.limits.size(); ++i) {
      for (std::size_t j = i + 1; j < report.limits.size(); ++j) {
        report.max_limit_diameter =
            std::max(report.max_limit_diameter,
                     detail::quotient_distance(report.limits[i].first,
                                               report.limits[j].first));
      }
    }
  }
  if (report.cluster_count >= 2) {
    report.verdict = UniquenessVerdict::non_unique;
  } else if (report.cluster_count == 1 &&
             report.starts_converged == report.starts_total) {
    report.verdict = UniquenessVerdict::unique;
  } else {
    report.verdict = UniquenessVerdict::inconclusive;
  }
  report.mean_converged_iterations =
      report.starts_converged > 0 ? iter_sum / report.starts_converged : 0.0;
  return report;
}

/// Scale-projected relative Frobenius error between two shape matrices:
/// both are normalized to unit Frobenius norm before comparing.
inline double shape_error(const Eigen::MatrixXd& estimate,
                          const Eigen::MatrixXd& truth) {
  return (estimate / estimate.norm() - truth / truth.norm()).norm();
}

struct ProbePoint {
  double mu;
  double objective;
};

inline std::vector<double> default_mu_grid() {
  return {1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
}

/// Evaluates the known-mean Gaussian objective in inverse parametrization,
///   g(P (x) Q) = (1/n) sum tr(P X~_i Q X~_i^T) - logdet(P (x) Q),
/// along the diagonal path P = diag(1/mu, 1), Q = diag(mu, 1) expressed in
/// the supplied orthonormal bases (columns of s_basis / t_basis). The
/// log-determinant cancels exactly on this path.
inline std::vector<ProbePoint> boundary_probe_with_bases(
    const SampleSet& x, const Eigen::Matrix2d& s_basis,
    const Eigen::Matrix2d& t_basis, const std::vector<double>& mu_grid) {
  if (x.p() != 2 || x.q() != 2) {
    throw DimensionMismatch("boundary_probe: needs 2x2 samples");
  }
  std::vector<Eigen::Matrix2d> rotated;
  rotated.reserve(static_cast<std::size_t>(x.size()));
  for (const auto& sample : x.samples()) {
    rotated.push_back(s_basis.transpose() * sample * t_basis);
  }
  std::vector<ProbePoint> points;
  points.reserve(mu_grid.size());
  for (const double mu : mu_grid) {
    const Eigen::Vector2d p_diag(1.0 / mu, 1.0);
    const Eigen::Vector2d q_diag(mu, 1.0);
    double trace_term = 0.0;
    for (const auto& xt : rotated) {
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
          trace_term += p_diag(k) * q_diag(l) * xt(k, l) * xt(k, l);
        }
      }
    }
    trace_term /= static_cast<double>(x.size());
    // q ln det diag(1/mu, 1) + p ln det diag(mu, 1) = 2 (ln mu - ln mu) = 0.
    points.push_back(ProbePoint{mu, trace_term});
  }
  return points;
}

/// Probe along the bounded-objective construction: the witness direction is
/// normalized and completed to an orthonormal basis on the Q side, the first
/// nonzero image X_i t is normalized into the P-side basis.
inline std::vector<ProbePoint> boundary_probe_2x2(
    const SampleSet& x, const Eigen::Vector2d& witness,
    const std::vector<double>& mu_grid) {
  if (witness.norm() == 0.0) {
    throw InvalidMatrix("boundary_probe_2x2: witness must be nonzero");
  }
  const Eigen::Vector2d t = witness.normalized();
  Eigen::Vector2d s(1.0, 0.0);
  for (const auto& sample : x.samples()) {
    const Eigen::Vector2d image = sample * t;
    if (image.norm() > 1e-14) {
      s = image.normalized();
      break;
    }
  }
  Eigen::Matrix2d s_basis, t_basis;
  s_basis << s.x(), -s.y(), s.y(), s.x();
  t_basis << t.x(), -t.y(), t.y(), t.x();
  return boundary_probe_with_bases(x, s_basis, t_basis, mu_grid);
}

}  // namespace kroncov
