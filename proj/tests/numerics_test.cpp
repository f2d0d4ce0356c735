#include <gtest/gtest.h>

#include <algorithm>

#include "irmite/numerics.hpp"
#include "test_util.hpp"

namespace irmite {
namespace {

TEST(RngTest, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(7), d(7);
  for (int i = 0; i < 101; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(RngTest, SplitDependsOnlyOnSeedAndLabel) {
  Rng parent(99);
  const Rng before = parent.split("features");
  for (int i = 0; i < 17; ++i) parent.next_u64();
  const Rng after = parent.split("features");
  EXPECT_EQ(before.seed(), after.seed());
  EXPECT_NE(parent.split("features").seed(), parent.split("outcomes").seed());
  EXPECT_NE(parent.split("rep", 0).seed(), parent.split("rep", 1).seed());
  EXPECT_NE(Rng(1).split("x").seed(), Rng(2).split("x").seed());
}

TEST(SampleUniformTest, RangeAndDeterminism) {
  Rng a(3), b(3);
  const Vector u = sample_uniform(a, 0.0, 1.0, 3);
  const Vector v = sample_uniform(b, 0.0, 1.0, 3);
  ASSERT_EQ(u.size(), 3);
  for (double x : u) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_EQ(u, v);
}

TEST(SampleUniformTest, MeanOfSymmetricInterval) {
  Rng rng(11);
  const Vector u = sample_uniform(rng, -1.0, 1.0, 10000);
  EXPECT_NEAR(u.mean(), 0.0, 0.05);
  EXPECT_GE(u.minCoeff(), -1.0);
  EXPECT_LT(u.maxCoeff(), 1.0);
}

TEST(SampleUniformTest, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(sample_uniform(rng, 1.0, 1.0, 3), Error);
  EXPECT_THROW(sample_uniform(rng, 0.0, 1.0, 0), Error);
}

TEST(SampleNormalTest, Moments) {
  Rng rng(12);
  const Vector z = sample_normal(rng, 10000);
  EXPECT_NEAR(z.mean(), 0.0, 0.05);
  EXPECT_NEAR(testing::sample_variance(z), 1.0, 0.1);
}

TEST(SampleNormalTest, SingleDrawDeterministicAndZeroRejected) {
  Rng a(5), b(5);
  EXPECT_EQ(sample_normal(a, 1)(0), sample_normal(b, 1)(0));
  Rng c(5);
  try {
    sample_normal(c, 0);
    FAIL() << "n = 0 accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArg);
  }
}

TEST(SampleBernoulliTest, DegenerateProbabilities) {
  Rng rng(2);
  EXPECT_EQ(sample_bernoulli(rng, 0.0, 5), std::vector<int>(5, 0));
  EXPECT_EQ(sample_bernoulli(rng, 1.0, 5), std::vector<int>(5, 1));
  EXPECT_THROW(sample_bernoulli(rng, 1.5, 5), Error);
}

TEST(SampleBernoulliTest, FairCoinFraction) {
  Rng rng(13);
  const auto v = sample_bernoulli(rng, 0.5, 10000);
  const double ones = static_cast<double>(std::count(v.begin(), v.end(), 1));
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(QrOrthonormalTest, IdentityMapsToIdentity) {
  const Matrix q = qr_orthonormal(Matrix::Identity(4, 4));
  EXPECT_LE((q.cwiseAbs() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(QrOrthonormalTest, OrthonormalForAllDimensions) {
  Rng rng(21);
  for (Eigen::Index d = 2; d <= 50; ++d) {
    const Matrix q = qr_orthonormal(sample_normal_matrix(rng, d, d));
    const double err = (q.transpose() * q - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    EXPECT_LE(err, 1e-10) << "d = " << d;
  }
}

TEST(QrOrthonormalTest, UnitDeterminant) {
  Rng rng(4);
  const Matrix q = qr_orthonormal(sample_normal_matrix(rng, 3, 3));
  EXPECT_NEAR(std::abs(q.determinant()), 1.0, 1e-10);
}

TEST(QrOrthonormalTest, SingularInputRejected) {
  Matrix g(3, 3);
  g << 1, 2, 3, 2, 4, 6, 1, 0, 1;
  try {
    qr_orthonormal(g);
    FAIL() << "rank-deficient input accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInput);
  }
}

TEST(CholeskyTest, HandCases) {
  EXPECT_EQ(cholesky(Matrix::Identity(3, 3)), Matrix::Identity(3, 3));
  Matrix s(2, 2);
  s << 4, 0, 0, 9;
  Matrix expected(2, 2);
  expected << 2, 0, 0, 3;
  EXPECT_LE((cholesky(s) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CholeskyTest, ReconstructsRandomPsd) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(30));
    const Matrix s = testing::random_psd(rng, d, 1e6, trial % 4 == 0);
    const Matrix l = cholesky(s);
    EXPECT_TRUE(l.isLowerTriangular());
    EXPECT_LE((l * l.transpose() - s).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
  }
}

TEST(CholeskyTest, RankOneSemidefinite) {
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  const Matrix s = v * v.transpose();
  const Matrix l = cholesky(s);
  EXPECT_LE((l * l.transpose() - s).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CholeskyTest, IndefiniteRejected) {
  Matrix s(2, 2);
  s << 1, 2, 2, 1;
  try {
    cholesky(s);
    FAIL() << "indefinite matrix accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}

TEST(SolveSpdTest, HandCases) {
  Vector b(3);
  b << 1, -2, 3;
  EXPECT_EQ(solve_spd(Matrix::Identity(3, 3), b), b);
  Matrix a(2, 2);
  a << 2, 0, 0, 4;
  Vector rhs(2);
  rhs << 2, 8;
  const Vector x = solve_spd(a, rhs);
  EXPECT_NEAR(x(0), 1.0, 1e-15);
  EXPECT_NEAR(x(1), 2.0, 1e-15);
}

TEST(SolveSpdTest, ResidualBoundAndAgreementWithCholeskySubstitution) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(25));
    const Matrix a = testing::random_psd(rng, d, 1e4);
    const Vector b = sample_normal(rng, static_cast<std::size_t>(d));
    const Vector x = solve_spd(a, b);
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    EXPECT_LE((a * x - b).cwiseAbs().maxCoeff(), 1e-8 * scale);

    // independent route: own factorization, then two triangular solves
    const Matrix l = cholesky(a);
    const Vector y = l.triangularView<Eigen::Lower>().solve(b);
    const Vector x2 = l.transpose().triangularView<Eigen::Upper>().solve(y);
    EXPECT_LE((x - x2).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + x.cwiseAbs().maxCoeff()));
  }
}

TEST(SolveSpdTest, NotPositiveDefinite) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1;
  try {
    solve_spd(a, Vector::Ones(2));
    FAIL() << "indefinite system accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPD);
  }
}

}  // namespace
}  // namespace irmite
