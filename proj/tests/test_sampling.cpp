#include <gtest/gtest.h>

#include "kroncov/sampling.hpp"
#include "test_util.hpp"

using namespace kroncov;
using testutil::diag;
using testutil::random_spd;

TEST(VecConvention, RowMajorRoundTrip) {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd v = vec_rowmajor(x);
  EXPECT_DOUBLE_EQ(v(0), 1);
  EXPECT_DOUBLE_EQ(v(2), 3);
  EXPECT_DOUBLE_EQ(v(3), 4);
  EXPECT_NEAR((unvec_rowmajor(v, 2, 3) - x).norm(), 0.0, 0.0);
}

TEST(MatrixNormal, DeterministicGivenSeed) {
  const MatrixNormalParams params(Eigen::MatrixXd::Zero(2, 3),
                                  SpdMatrix::identity(2),
                                  SpdMatrix::identity(3));
  const SampleSet a = sample_matrix_normal(params, 5, 42);
  const SampleSet b = sample_matrix_normal(params, 5, 42);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);
  }
  const SampleSet c = sample_matrix_normal(params, 5, 43);
  EXPECT_FALSE(a[0] == c[0]);
}

TEST(MatrixNormal, VecCovarianceMatchesKroneckerProduct) {
  Rng seed_rng(7);
  const SpdMatrix p = random_spd(seed_rng, 2);
  const SpdMatrix q = random_spd(seed_rng, 2);
  Eigen::MatrixXd mean(2, 2);
  mean << 1.0, -2.0, 0.5, 3.0;
  const MatrixNormalParams params(mean, p, q);
  const Eigen::Index n = 50000;
  const SampleSet x = sample_matrix_normal(params, n, 2024);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& s : x.samples()) {
    const Eigen::VectorXd v = vec_rowmajor(s - mean);
    cov.noalias() += v * v.transpose();
  }
  cov /= static_cast<double>(n);
  const Eigen::MatrixXd target = kron_dense(p.mat(), q.mat());
  EXPECT_LT((cov - target).norm() / target.norm(), 0.05);
}

TEST(Elliptical, RaceSamplesHaveUnitNorm) {
  const SampleSet x = sample_elliptical(SpdMatrix::identity(6),
                                        TailModel::race, 2, 3, 50, 9);
  for (const auto& s : x.samples()) {
    EXPECT_DOUBLE_EQ(vec_rowmajor(s).norm(), 1.0);
  }
}

TEST(Elliptical, RaceUniformOnSphereHasZeroMean) {
  const Eigen::Index n = 20000;
  const SampleSet x = sample_elliptical(SpdMatrix::identity(4),
                                        TailModel::race, 2, 2, n, 5);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& s : x.samples()) mean += vec_rowmajor(s);
  mean /= static_cast<double>(n);
  // Per-coordinate variance on the unit sphere in R^4 is 1/4.
  const double band = 3.0 * std::sqrt(0.25 / static_cast<double>(n));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_LT(std::abs(mean(i)), band);
  }
}

TEST(Elliptical, StudentTSecondMomentMatchesTheory) {
  // For the scaled-Gaussian construction the vec covariance is
  // shape * nu / (nu - 2); check at nu = 8 with a 5% Monte Carlo band.
  Rng seed_rng(44);
  const SpdMatrix shape = random_spd(seed_rng, 4);
  const double nu = 8.0;
  const Eigen::Index n = 50000;
  const SampleSet x =
      sample_elliptical(shape, TailModel::student_t, 2, 2, n, 45, nu);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& s : x.samples()) {
    const Eigen::VectorXd v = vec_rowmajor(s);
    cov.noalias() += v * v.transpose();
  }
  cov /= static_cast<double>(n);
  const Eigen::MatrixXd target = shape.mat() * (nu / (nu - 2.0));
  EXPECT_LT((cov - target).norm() / target.norm(), 0.05);
}

TEST(Elliptical, DeterministicAndTailValidation) {
  const SpdMatrix shape = SpdMatrix::identity(4);
  const SampleSet a =
      sample_elliptical(shape, TailModel::student_t, 2, 2, 8, 77, 2.1);
  const SampleSet b =
      sample_elliptical(shape, TailModel::student_t, 2, 2, 8, 77, 2.1);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);
  }
  EXPECT_THROW(
      sample_elliptical(shape, TailModel::student_t, 2, 2, 1, 0, -1.0),
      InvalidMatrix);
}

TEST(SampleMean, BasicCases) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 0, 0, 0;
  b << 3, 0, 0, 0;
  EXPECT_NEAR((sample_mean(SampleSet(2, 2, {a})) - a).norm(), 0.0, 0.0);
  EXPECT_NEAR(sample_mean(SampleSet(2, 2, {a, -a})).norm(), 0.0, 0.0);
  Eigen::MatrixXd expected(2, 2);
  expected << 2, 0, 0, 0;
  EXPECT_NEAR((sample_mean(SampleSet(2, 2, {a, b})) - expected).norm(), 0.0, 0.0);
}

TEST(Scm, RankFlagReflectsSampleCount) {
  const MatrixNormalParams params(Eigen::MatrixXd::Zero(2, 2),
                                  SpdMatrix::identity(2),
                                  SpdMatrix::identity(2));
  const SampleSet few = sample_matrix_normal(params, 3, 6);
  EXPECT_FALSE(scm(few, sample_mean(few)).full_rank);
  const SampleSet many = sample_matrix_normal(params, 40, 6);
  EXPECT_TRUE(scm(many, sample_mean(many)).full_rank);
}

TEST(Scm, AllSamplesEqualToMeanGiveZero) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  const ScmResult r = scm(SampleSet(2, 2, {a, a, a}), a);
  EXPECT_NEAR(r.cov.norm(), 0.0, 0.0);
  EXPECT_FALSE(r.full_rank);
}

TEST(Scm, MonteCarloRecoversIdentity) {
  const MatrixNormalParams params(Eigen::MatrixXd::Zero(2, 2),
                                  SpdMatrix::identity(2),
                                  SpdMatrix::identity(2));
  const SampleSet x = sample_matrix_normal(params, 50000, 31);
  const ScmResult r = scm(x, sample_mean(x));
  EXPECT_TRUE(r.full_rank);
  EXPECT_LT((r.cov - Eigen::MatrixXd::Identity(4, 4)).norm() / 2.0, 0.05);
}

TEST(Scm, CenteredDataMatchesExplicitMean) {
  const MatrixNormalParams params(Eigen::MatrixXd::Constant(2, 2, 1.5),
                                  SpdMatrix::identity(2),
                                  SpdMatrix::identity(2));
  const SampleSet x = sample_matrix_normal(params, 25, 8);
  const Eigen::MatrixXd mean = sample_mean(x);
  const ScmResult direct = scm(x, mean);
  const ScmResult via_centered =
      scm(centered(x, mean), Eigen::MatrixXd::Zero(2, 2));
  EXPECT_NEAR((direct.cov - via_centered.cov).norm(), 0.0, 1e-12);
}

TEST(CenterReduce, HandWorkedTwoSampleCase) {
  Eigen::MatrixXd x1(2, 2), x2(2, 2);
  x1 << 2, 0, 0, 0;
  x2.setZero();
  const SampleSet z = center_reduce(SampleSet(2, 2, {x1, x2}));
  ASSERT_EQ(z.size(), 1);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, 0, 0;
  const double match_plus = (z[0] - expected).norm();
  const double match_minus = (z[0] + expected).norm();
  EXPECT_NEAR(std::min(match_plus, match_minus), 0.0, 1e-12);
}

TEST(CenterReduce, IdenticalSamplesVanish) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  const SampleSet z = center_reduce(SampleSet(2, 2, {a, a}));
  EXPECT_NEAR(z[0].norm(), 0.0, 1e-14);
}

TEST(CenterReduce, RequiresTwoSamples) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_THROW(center_reduce(SampleSet(2, 2, {a})), InvalidMatrix);
}

TEST(CenterReduce, QuadraticFormIdentity) {
  // (1/n) sum (A vec(x - xbar), vec(x - xbar)) ==
  // (1/(n-1)) sum (A vec(z), vec(z)) for every SPD A.
  Rng rng(99);
  const MatrixNormalParams params(Eigen::MatrixXd::Constant(2, 3, 0.7),
                                  SpdMatrix::identity(2),
                                  SpdMatrix::identity(3));
  const SampleSet x = sample_matrix_normal(params, 7, 55);
  const SampleSet z = center_reduce(x);
  ASSERT_EQ(z.size(), x.size() - 1);
  const Eigen::MatrixXd mean = sample_mean(x);
  for (int rep = 0; rep < 20; ++rep) {
    const SpdMatrix a = random_spd(rng, 6);
    double lhs = 0.0;
    for (const auto& s : x.samples()) {
      const Eigen::VectorXd v = vec_rowmajor(s - mean);
      lhs += v.dot(a.mat() * v);
    }
    lhs /= static_cast<double>(x.size());
    double rhs = 0.0;
    for (const auto& s : z.samples()) {
      const Eigen::VectorXd v = vec_rowmajor(s);
      rhs += v.dot(a.mat() * v);
    }
    rhs /= static_cast<double>(z.size());
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
  }
}
