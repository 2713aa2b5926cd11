#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kroncov {

struct InvalidMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

/// Eigenvalues of the symmetrized matrix, ascending.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(a),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double sym_lambda_max(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd ev = sym_eigenvalues(a);
  return ev(ev.size() - 1);
}

/// Symmetric positive definite matrix with invariants validated at
/// construction: symmetry up to 1e-12 * (1 + max |a_ij|) and smallest
/// eigenvalue above 1e-12 times the spectral norm. Immutable afterwards.
class SpdMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;
  static constexpr double kDefinitenessTol = 1e-12;

  explicit SpdMatrix(Eigen::MatrixXd a) {
    if (a.rows() != a.cols() || a.rows() < 1) {
      throw InvalidMatrix("SpdMatrix: matrix must be square and non-empty");
    }
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose().eval()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * scale) {
      throw InvalidMatrix("SpdMatrix: input is not symmetric (max |a_ij - a_ji| = " +
                          std::to_string(asym) + ")");
    }
    m_ = symmetrized(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(m_.rows() - 1);
    if (!(lmax > 0.0) || !(lmin > kDefinitenessTol * lmax)) {
      throw InvalidMatrix("SpdMatrix: matrix is not positive definite "
                          "(lambda_min = " + std::to_string(lmin) + ")");
    }
  }

  static SpdMatrix identity(Eigen::Index dim) {
    return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Kronecker product of dense matrices, block (i,j) = a(i,j) * b.
inline Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

inline SpdMatrix kron(const SpdMatrix& a, const SpdMatrix& b) {
  return SpdMatrix(kron_dense(a.mat(), b.mat()));
}

/// Natural log of the determinant via Cholesky; never forms the raw
/// determinant. Throws FactorizationError on a non-positive pivot.
inline double logdet(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("logdet: Cholesky factorization failed "
                             "(matrix not positive definite)");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline double logdet(const SpdMatrix& a) { return logdet(a.mat()); }

/// A^t through the spectral decomposition U diag(lambda^t) U^T.
inline Eigen::MatrixXd spd_power_dense(const Eigen::MatrixXd& a, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(a));
  if (es.info() != Eigen::Success) {
    throw FactorizationError("spd_power: eigendecomposition failed");
  }
  const Eigen::VectorXd powered =
      es.eigenvalues().array().pow(t).matrix();
  return symmetrized(es.eigenvectors() * powered.asDiagonal() *
                     es.eigenvectors().transpose());
}

inline SpdMatrix spd_power(const SpdMatrix& a, double t) {
  return SpdMatrix(spd_power_dense(a.mat(), t));
}

inline SpdMatrix inverse(const SpdMatrix& a) { return spd_power(a, -1.0); }

/// Geodesic gamma_t(P, R) = P^{1/2} (P^{-1/2} R P^{-1/2})^t P^{1/2} on the
/// SPD cone; t may lie outside [0, 1] (extended geodesic, no clamping).
inline Eigen::MatrixXd geodesic_dense(const Eigen::MatrixXd& p,
                                      const Eigen::MatrixXd& r, double t) {
  if (p.rows() != r.rows() || p.cols() != r.cols()) {
    throw DimensionMismatch("geodesic: endpoint dimensions differ");
  }
  const Eigen::MatrixXd p_half = spd_power_dense(p, 0.5);
  const Eigen::MatrixXd p_mhalf = spd_power_dense(p, -0.5);
  const Eigen::MatrixXd mid = spd_power_dense(p_mhalf * r * p_mhalf, t);
  return symmetrized(p_half * mid * p_half);
}

inline SpdMatrix geodesic(const SpdMatrix& p, const SpdMatrix& r, double t) {
  return SpdMatrix(geodesic_dense(p.mat(), r.mat(), t));
}

/// A point on the (extended) geodesic together with its parameter.
struct GeodesicPoint {
  double t;
  SpdMatrix value;
};

inline GeodesicPoint geodesic_point(const SpdMatrix& p, const SpdMatrix& r,
                                    double t) {
  return GeodesicPoint{t, geodesic(p, r, t)};
}

/// Largest eigenvalue; equals the operator 2-norm on the SPD cone.
inline double spectral_norm(const SpdMatrix& a) {
  return sym_lambda_max(a.mat());
}

inline double condition_number(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd ev = sym_eigenvalues(a);
  const double lmin = ev(0);
  const double lmax = ev(ev.size() - 1);
  if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

}  // namespace kroncov
