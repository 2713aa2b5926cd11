#include <gtest/gtest.h>

#include "kroncov/gaussian.hpp"
#include "test_util.hpp"

using namespace kroncov;
using testutil::diag;
using testutil::random_matrix;
using testutil::random_spd;

namespace {

SampleSet gaussian_data(Eigen::Index p, Eigen::Index q, Eigen::Index n,
                        std::uint64_t seed) {
  return sample_matrix_normal(
      MatrixNormalParams(Eigen::MatrixXd::Zero(p, q), SpdMatrix::identity(p),
                         SpdMatrix::identity(q)),
      n, seed);
}

}  // namespace

TEST(KroneckerPairType, ValidatesDeclaredNormalization) {
  Rng rng(0);
  const SpdMatrix p = random_spd(rng, 2);
  const SpdMatrix q = random_spd(rng, 3);
  EXPECT_THROW(KroneckerPair(p, q, Normalization::spectral_p), InvalidMatrix);
  const auto ok = KroneckerPair::normalized(p, q, Normalization::spectral_p);
  EXPECT_NEAR(spectral_norm(ok.p_factor()), 1.0, 1e-12);
  // spectral_p keeps the Kronecker product intact.
  EXPECT_NEAR((kron_dense(ok.p_factor().mat(), ok.q_factor().mat()) -
               kron_dense(p.mat(), q.mat()))
                  .norm(),
              0.0, 1e-10 * kron_dense(p.mat(), q.mat()).norm());
  const auto both = KroneckerPair::normalized(p, q, Normalization::spectral_both);
  EXPECT_NEAR(spectral_norm(both.p_factor()), 1.0, 1e-12);
  EXPECT_NEAR(spectral_norm(both.q_factor()), 1.0, 1e-12);
}

TEST(GaussianNll, IdentityPairIsFrobeniusNorm) {
  Rng rng(1);
  const Eigen::MatrixXd x = random_matrix(rng, 2, 3);
  const SampleSet set(2, 3, {x});
  const auto pair = KroneckerPair::identity(2, 3, Normalization::none);
  EXPECT_NEAR(gaussian_nll(Eigen::MatrixXd::Zero(2, 3), pair, set),
              x.squaredNorm(), 1e-12);
}

TEST(GaussianNll, HandEvaluatedValue) {
  // P = 2I, Q = I, M = 0, single sample X = I: trace term 1, logdet 4 ln 2.
  const SampleSet set(2, 2, {Eigen::MatrixXd::Identity(2, 2)});
  const KroneckerPair pair(
      SpdMatrix(Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(2, 2))),
      SpdMatrix::identity(2), Normalization::none);
  EXPECT_NEAR(gaussian_nll(Eigen::MatrixXd::Zero(2, 2), pair, set),
              1.0 + 4.0 * std::log(2.0), 1e-12);
}

TEST(GaussianNll, InvariantUnderScaleTransfer) {
  Rng rng(2);
  const SampleSet x = gaussian_data(2, 3, 6, 17);
  const SpdMatrix p = random_spd(rng, 2);
  const SpdMatrix q = random_spd(rng, 3);
  const Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 3);
  const double base = gaussian_nll(
      mean, KroneckerPair(p, q, Normalization::none), x);
  for (double c : {0.1, 2.0, 37.5}) {
    const KroneckerPair scaled(SpdMatrix(Eigen::MatrixXd(c * p.mat())),
                               SpdMatrix(Eigen::MatrixXd(q.mat() / c)),
                               Normalization::none);
    EXPECT_NEAR(gaussian_nll(mean, scaled, x), base,
                1e-12 * (1.0 + std::abs(base)));
  }
}

TEST(GaussianNll, FactorFormulaMatchesMaterializedKronecker) {
  // The estimator never materializes P (x) Q; cross-check the factor-wise
  // objective against the vec-space form with the full pq x pq matrix.
  Rng rng(30);
  const SampleSet x = gaussian_data(2, 3, 5, 31);
  const Eigen::MatrixXd mean = sample_mean(x);
  for (int rep = 0; rep < 10; ++rep) {
    const SpdMatrix p = random_spd(rng, 2);
    const SpdMatrix q = random_spd(rng, 3);
    const double fast = gaussian_nll(mean, KroneckerPair(p, q, Normalization::none), x);
    const Eigen::MatrixXd big = kron_dense(p.mat(), q.mat());
    const Eigen::LLT<Eigen::MatrixXd> llt(big);
    double slow = 0.0;
    for (const auto& s : x.samples()) {
      const Eigen::VectorXd v = vec_rowmajor(s - mean);
      slow += v.dot(llt.solve(v));
    }
    slow = slow / static_cast<double>(x.size()) + logdet(big);
    EXPECT_NEAR(fast, slow, 1e-9 * (1.0 + std::abs(slow)));
  }
}

TEST(GaussianNll, GeodesicallyConvexInInverseParameters) {
  // In the inverse parameters A = P^{-1}, B = Q^{-1} the known-mean
  // objective is convex along SPD geodesics taken factor-wise.
  const SampleSet x = gaussian_data(2, 3, 6, 21);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 3);
  Rng rng(22);
  const auto value = [&](const SpdMatrix& a, const SpdMatrix& b) {
    return gaussian_nll(zero, KroneckerPair(inverse(a), inverse(b),
                                            Normalization::none),
                        x);
  };
  for (int rep = 0; rep < 20; ++rep) {
    const SpdMatrix a1 = random_spd(rng, 2), a2 = random_spd(rng, 2);
    const SpdMatrix b1 = random_spd(rng, 3), b2 = random_spd(rng, 3);
    const double g0 = value(a1, b1);
    const double g1 = value(a2, b2);
    for (double t : {0.25, 0.5, 0.75}) {
      const double mid = value(geodesic(a1, a2, t), geodesic(b1, b2, t));
      EXPECT_LE(mid, (1.0 - t) * g0 + t * g1 + 1e-10);
    }
  }
}

TEST(GaussianNll, RejectsDimensionMismatch) {
  const SampleSet x = gaussian_data(2, 3, 2, 3);
  const auto pair = KroneckerPair::identity(3, 2, Normalization::none);
  EXPECT_THROW(gaussian_nll(Eigen::MatrixXd::Zero(2, 3), pair, x),
               DimensionMismatch);
}

TEST(GffUpdateRhs, SingleSampleSubstitution) {
  // At (I, I) the first-order RHS reduce to (1/q) X X^T and (1/p) X^T X.
  Rng rng(3);
  Eigen::MatrixXd x = random_matrix(rng, 3, 3);
  while (std::abs(x.determinant()) < 0.3) x = random_matrix(rng, 3, 3);
  const SampleSet set(3, 3, {x});
  const auto [rhs_p, rhs_q] =
      gff_update_rhs(KroneckerPair::identity(3, 3, Normalization::spectral_p), set);
  EXPECT_NEAR((rhs_p - x * x.transpose() / 3.0).norm(), 0.0, 1e-12);
  EXPECT_NEAR((rhs_q - x.transpose() * x / 3.0).norm(), 0.0, 1e-12);
}

TEST(GffStep, SingularSingleSampleIsRankDeficient) {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 2.0, 0.5, 1.0;  // rank one
  const SampleSet set(2, 2, {x});
  EXPECT_THROW(
      gff_step(KroneckerPair::identity(2, 2, Normalization::spectral_p), set),
      RankDeficientUpdate);
}

TEST(GffStep, PreservesSpectralNormalization) {
  const SampleSet x = gaussian_data(2, 3, 8, 4);
  const SampleSet y = centered(x, sample_mean(x));
  auto pair = KroneckerPair::identity(2, 3, Normalization::spectral_p);
  for (int i = 0; i < 5; ++i) {
    pair = gff_step(pair, y);
    EXPECT_NEAR(spectral_norm(pair.p_factor()), 1.0, 1e-12);
  }
}

TEST(GffStep, FixedPointMapsToItself) {
  const SampleSet x = gaussian_data(2, 3, 10, 5);
  const auto result = gff_estimate(
      x, KroneckerPair::identity(2, 3, Normalization::spectral_p), std::nullopt,
      1e-12, 20000);
  ASSERT_EQ(result.status, TerminationStatus::converged);
  const SampleSet y = centered(x, result.mean);
  const KroneckerPair next = gff_step(result.pair, y);
  EXPECT_NEAR((next.p_factor().mat() - result.pair.p_factor().mat()).norm(),
              0.0, 1e-10);
  EXPECT_NEAR((next.q_factor().mat() - result.pair.q_factor().mat()).norm(),
              0.0, 1e-10);
}

TEST(GffResidual, ExactFixedPointResidualIsTiny) {
  // For n = 1 with square invertible X, the pair (P, Q) with
  // P = (1/q) X Q^{-1} X^T solves both first-order conditions exactly.
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.0, 0.0, 2.0;
  const SampleSet set(2, 2, {x});
  const auto pair = KroneckerPair::normalized(
      SpdMatrix(testutil::diag({0.5, 2.0})), SpdMatrix::identity(2),
      Normalization::spectral_p);
  EXPECT_LE(gff_residual(pair, set), 1e-12);
}

TEST(GffResidual, ZeroAtFixedPointPositiveAway) {
  const SampleSet x = gaussian_data(2, 3, 10, 6);
  const auto result = gff_estimate(
      x, KroneckerPair::identity(2, 3, Normalization::spectral_p), std::nullopt,
      1e-12, 20000);
  ASSERT_EQ(result.status, TerminationStatus::converged);
  const SampleSet y = centered(x, result.mean);
  EXPECT_LE(gff_residual(result.pair, y), 1e-11);
  Rng rng(7);
  const auto far = KroneckerPair::normalized(random_spd(rng, 2), random_spd(rng, 3),
                                             Normalization::spectral_p);
  EXPECT_GT(gff_residual(far, y), 1e-3);
}

TEST(GffResidual, DecreasesAlongConvergentRun) {
  const SampleSet x = gaussian_data(2, 3, 10, 25);
  const SampleSet y = centered(x, sample_mean(x));
  auto pair = KroneckerPair::identity(2, 3, Normalization::spectral_p);
  std::vector<double> residuals;
  for (int it = 0; it < 25; ++it) {
    pair = gff_step(pair, y);
    residuals.push_back(gff_residual(pair, y));
  }
  // Linear convergence: compare across a window to allow small wobbles.
  for (std::size_t k = 5; k < residuals.size(); ++k) {
    EXPECT_LT(residuals[k], residuals[k - 5]);
  }
  EXPECT_LT(residuals.back(), residuals.front() * 1e-3);
}

TEST(GffEstimate, ConvergesWithMonotoneObjective) {
  // Data from a known non-identity factor pair with nonzero mean.
  Rng rng(8);
  const SpdMatrix p0 = random_spd(rng, 2);
  const SpdMatrix q0 = random_spd(rng, 3);
  const SampleSet x = sample_matrix_normal(
      MatrixNormalParams(Eigen::MatrixXd::Constant(2, 3, 0.4), p0, q0), 10, 8);
  const auto result = gff_estimate(
      x, KroneckerPair::identity(2, 3, Normalization::spectral_p));
  EXPECT_EQ(result.status, TerminationStatus::converged);
  EXPECT_LE(result.residual, 1e-9);
  for (std::size_t i = 1; i < result.objective_trace.size(); ++i) {
    EXPECT_LE(result.objective_trace[i], result.objective_trace[i - 1] + 1e-10);
  }
}

TEST(GffResidual, InvariantOnTheScaleQuotient) {
  // The residual is a function of the pair's class modulo (cP, Q/c).
  const SampleSet x = gaussian_data(2, 3, 8, 19);
  const SampleSet y = centered(x, sample_mean(x));
  Rng rng(20);
  const SpdMatrix p = random_spd(rng, 2);
  const SpdMatrix q = random_spd(rng, 3);
  const KroneckerPair base(p, q, Normalization::none);
  const double r0 = gff_residual(base, y);
  for (double c : {0.05, 3.0, 120.0}) {
    const KroneckerPair scaled(SpdMatrix(Eigen::MatrixXd(c * p.mat())),
                               SpdMatrix(Eigen::MatrixXd(q.mat() / c)),
                               Normalization::none);
    EXPECT_NEAR(gff_residual(scaled, y), r0, 1e-10 * (1.0 + r0));
  }
}

TEST(GffEstimate, LimitIndependentOfInit) {
  const SampleSet x = gaussian_data(2, 3, 10, 9);
  Rng rng(10);
  std::optional<Eigen::MatrixXd> reference;
  for (int start = 0; start < 8; ++start) {
    const auto init = KroneckerPair::normalized(
        random_spd(rng, 2), random_spd(rng, 3), Normalization::spectral_p);
    const auto result = gff_estimate(x, init);
    ASSERT_EQ(result.status, TerminationStatus::converged);
    Eigen::MatrixXd prod = kron_dense(result.pair.p_factor().mat(),
                                      result.pair.q_factor().mat());
    if (!reference) {
      reference = prod;
    } else {
      EXPECT_LE((prod - *reference).norm() / reference->norm(), 1e-6);
    }
  }
}

TEST(GffEstimate, ScaledInitsAgreeAfterNormalization) {
  const SampleSet x = gaussian_data(2, 3, 8, 11);
  Rng rng(12);
  const SpdMatrix p0 = random_spd(rng, 2);
  const SpdMatrix q0 = random_spd(rng, 3);
  const auto a = gff_estimate(
      x, KroneckerPair::normalized(p0, q0, Normalization::spectral_p));
  const auto b = gff_estimate(
      x, KroneckerPair::normalized(
             SpdMatrix(Eigen::MatrixXd(5.0 * p0.mat())),
             SpdMatrix(Eigen::MatrixXd(q0.mat() / 5.0)),
             Normalization::spectral_p));
  ASSERT_EQ(a.status, TerminationStatus::converged);
  ASSERT_EQ(b.status, TerminationStatus::converged);
  EXPECT_LE((a.pair.p_factor().mat() - b.pair.p_factor().mat()).norm(), 1e-8);
  EXPECT_LE((a.pair.q_factor().mat() - b.pair.q_factor().mat()).norm(),
            1e-8 * b.pair.q_factor().mat().norm());
}

TEST(GffEstimate, UnknownMeanReductionIdentity) {
  // The unknown-mean objective at the sample mean equals the known-mean
  // objective on the center-reduced set, for any factor pair.
  const SampleSet x = gaussian_data(2, 3, 7, 13);
  const SampleSet z = center_reduce(x);
  Rng rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const KroneckerPair pair(random_spd(rng, 2), random_spd(rng, 3),
                             Normalization::none);
    const double via_mean = gaussian_nll(sample_mean(x), pair, x);
    const double via_reduced =
        gaussian_nll(Eigen::MatrixXd::Zero(2, 3), pair, z);
    EXPECT_NEAR(via_mean, via_reduced, 1e-9 * (1.0 + std::abs(via_mean)));
  }
}

TEST(GffEstimate, SingleSampleKnownMeanHasNonUniqueLimits) {
  // n = 1, p = q = 2, known zero mean: distinct inits give distinct limits
  // with the same objective value.
  Rng rng(15);
  Eigen::MatrixXd x = random_matrix(rng, 2, 2);
  while (std::abs(x.determinant()) < 0.3) x = random_matrix(rng, 2, 2);
  const SampleSet set(2, 2, {x});
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const auto r1 = gff_estimate(
      set, KroneckerPair::normalized(random_spd(rng, 2), random_spd(rng, 2),
                                     Normalization::spectral_p),
      zero);
  const auto r2 = gff_estimate(
      set, KroneckerPair::normalized(random_spd(rng, 2), random_spd(rng, 2),
                                     Normalization::spectral_p),
      zero);
  ASSERT_EQ(r1.status, TerminationStatus::converged);
  ASSERT_EQ(r2.status, TerminationStatus::converged);
  const Eigen::MatrixXd k1 =
      kron_dense(r1.pair.p_factor().mat(), r1.pair.q_factor().mat());
  const Eigen::MatrixXd k2 =
      kron_dense(r2.pair.p_factor().mat(), r2.pair.q_factor().mat());
  EXPECT_GT((k1 - k2).norm() / k1.norm(), 1e-3);
  EXPECT_NEAR(r1.objective_trace.back(), r2.objective_trace.back(), 1e-8);
}

TEST(GffEstimate, RankFailurePropagates) {
  // Unknown mean with n = 2 centers away one degree of freedom; the
  // column-factor update cannot reach full rank when q > p.
  const SampleSet x = gaussian_data(2, 3, 2, 16);
  EXPECT_THROW(gff_estimate(x, KroneckerPair::identity(2, 3, Normalization::spectral_p)),
               RankDeficientUpdate);
}
