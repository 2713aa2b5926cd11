#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kroncov/linalg.hpp"
#include "kroncov/rng.hpp"

namespace kroncov {

/// Ordered collection of n real p x q sample matrices.
class SampleSet {
 public:
  SampleSet(Eigen::Index p, Eigen::Index q,
            std::vector<Eigen::MatrixXd> samples)
      : p_(p), q_(q), samples_(std::move(samples)) {
    if (p_ < 1 || q_ < 1) {
      throw InvalidMatrix("SampleSet: dimensions must be positive");
    }
    if (samples_.empty()) {
      throw InvalidMatrix("SampleSet: at least one sample required");
    }
    for (const auto& s : samples_) {
      if (s.rows() != p_ || s.cols() != q_) {
        throw DimensionMismatch("SampleSet: sample dimensions differ from (p, q)");
      }
    }
  }

  Eigen::Index p() const { return p_; }
  Eigen::Index q() const { return q_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(samples_.size()); }
  const Eigen::MatrixXd& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Eigen::MatrixXd>& samples() const { return samples_; }

 private:
  Eigen::Index p_, q_;
  std::vector<Eigen::MatrixXd> samples_;
};

struct MatrixNormalParams {
  Eigen::MatrixXd mean;  // p x q
  SpdMatrix row_cov;     // p x p
  SpdMatrix col_cov;     // q x q

  MatrixNormalParams(Eigen::MatrixXd m, SpdMatrix p, SpdMatrix q)
      : mean(std::move(m)), row_cov(std::move(p)), col_cov(std::move(q)) {
    if (mean.rows() != row_cov.dim() || mean.cols() != col_cov.dim()) {
      throw DimensionMismatch("MatrixNormalParams: inconsistent dimensions");
    }
  }
};

/// Row-major vectorization: vec(X)_{i*q + j} = X(i, j). With this convention
/// the covariance of vec(X) for X ~ MN(M, P (x) Q) is the standard Kronecker
/// product kron(P, Q).
inline Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& x) {
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      v(i * x.cols() + j) = x(i, j);
    }
  }
  return v;
}

inline Eigen::MatrixXd unvec_rowmajor(const Eigen::VectorXd& v,
                                      Eigen::Index p, Eigen::Index q) {
  Eigen::MatrixXd x(p, q);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      x(i, j) = v(i * q + j);
    }
  }
  return x;
}

namespace detail {

inline Eigen::MatrixXd standard_normal_matrix(Rng& rng, Eigen::Index p,
                                              Eigen::Index q) {
  Eigen::MatrixXd z(p, q);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      z(i, j) = rng.normal();
    }
  }
  return z;
}

}  // namespace detail

/// Draws X_i = M + P^{1/2} Z Q^{1/2} with Z i.i.d. standard normal. Sample i
/// uses the stream (seed, i), so samples can be regenerated independently.
inline SampleSet sample_matrix_normal(const MatrixNormalParams& params,
                                      Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidMatrix("sample_matrix_normal: n must be >= 1");
  const Eigen::Index p = params.row_cov.dim();
  const Eigen::Index q = params.col_cov.dim();
  const Eigen::MatrixXd p_half = spd_power_dense(params.row_cov.mat(), 0.5);
  const Eigen::MatrixXd q_half = spd_power_dense(params.col_cov.mat(), 0.5);
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    samples.push_back(params.mean +
                      p_half * detail::standard_normal_matrix(rng, p, q) * q_half);
  }
  return SampleSet(p, q, std::move(samples));
}

enum class TailModel { gaussian, student_t, race };

/// Generalized-elliptical sampler on vec space R^{pq} with the given shape
/// matrix; samples are reshaped to p x q (row-major). For race, each draw is
/// a Gaussian vector divided by its Euclidean norm, so |vec(X)| = 1 exactly.
inline SampleSet sample_elliptical(const SpdMatrix& shape, TailModel tail,
                                   Eigen::Index p, Eigen::Index q,
                                   Eigen::Index n, std::uint64_t seed,
                                   double student_t_nu = 3.0) {
  if (shape.dim() != p * q) {
    throw DimensionMismatch("sample_elliptical: shape must be pq x pq");
  }
  if (n < 1) throw InvalidMatrix("sample_elliptical: n must be >= 1");
  if (tail == TailModel::student_t && !(student_t_nu > 0.0)) {
    throw InvalidMatrix("sample_elliptical: student-t nu must be positive");
  }
  const Eigen::MatrixXd shape_half = spd_power_dense(shape.mat(), 0.5);
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    Eigen::VectorXd z(p * q);
    for (Eigen::Index k = 0; k < p * q; ++k) z(k) = rng.normal();
    Eigen::VectorXd v = shape_half * z;
    switch (tail) {
      case TailModel::gaussian:
        break;
      case TailModel::student_t:
        v *= std::sqrt(student_t_nu / rng.chi_squared(student_t_nu));
        break;
      case TailModel::race:
        v /= v.norm();
        break;
    }
    samples.push_back(unvec_rowmajor(v, p, q));
  }
  return SampleSet(p, q, std::move(samples));
}

inline Eigen::MatrixXd sample_mean(const SampleSet& x) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(x.p(), x.q());
  for (const auto& s : x.samples()) m += s;
  return m / static_cast<double>(x.size());
}

inline SampleSet centered(const SampleSet& x, const Eigen::MatrixXd& mean) {
  std::vector<Eigen::MatrixXd> ys;
  ys.reserve(static_cast<std::size_t>(x.size()));
  for (const auto& s : x.samples()) ys.push_back(s - mean);
  return SampleSet(x.p(), x.q(), std::move(ys));
}

/// Sample covariance of the vectorized deviations; possibly rank deficient,
/// hence returned as a plain symmetric PSD matrix with a validity flag.
struct ScmResult {
  Eigen::MatrixXd cov;  // pq x pq, symmetric PSD
  bool full_rank;
};

inline ScmResult scm(const SampleSet& x, const Eigen::MatrixXd& mean) {
  const Eigen::Index d = x.p() * x.q();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (const auto& sample : x.samples()) {
    const Eigen::VectorXd v = vec_rowmajor(sample - mean);
    s.noalias() += v * v.transpose();
  }
  s = symmetrized(s / static_cast<double>(x.size()));
  const Eigen::VectorXd ev = sym_eigenvalues(s);
  const double lmax = ev(ev.size() - 1);
  const bool full = lmax > 0.0 && ev(0) > 1e-10 * lmax;
  return ScmResult{std::move(s), full};
}

/// Centering transform: maps n samples to n-1 samples Z with
///   (1/n) sum (A vec(x - xbar), vec(x - xbar)) =
///   (1/(n-1)) sum (A vec(z), vec(z))          for every SPD A.
/// The orthonormal basis is the deterministic Householder completion whose
/// last vector is 1/sqrt(n), so Z is reproducible across runs. Z itself is
/// basis-dependent; the quadratic-form identity is the contract.
inline SampleSet center_reduce(const SampleSet& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw InvalidMatrix("center_reduce: need at least two samples");
  // Householder reflection exchanging e_n and 1/sqrt(n): column j < n of it
  // is e_j - 2 w_j w, an orthonormal basis of the complement of ker S.
  Eigen::VectorXd w(n);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) w(i) = inv_sqrt_n;
  w(n - 1) -= 1.0;
  w /= w.norm();
  Eigen::MatrixXd weighted_sum = Eigen::MatrixXd::Zero(x.p(), x.q());
  for (Eigen::Index i = 0; i < n; ++i) weighted_sum += w(i) * x[i];
  const double scale =
      std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
  std::vector<Eigen::MatrixXd> zs;
  zs.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n - 1; ++j) {
    zs.push_back(scale * (x[j] - 2.0 * w(j) * weighted_sum));
  }
  return SampleSet(x.p(), x.q(), std::move(zs));
}

}  // namespace kroncov
