#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "irmite/datagen.hpp"
#include "irmite/dataset_csv.hpp"
#include "test_util.hpp"

namespace irmite {
namespace {

void expect_identities(const Dataset& ds) {
  ASSERT_TRUE(ds.oracle.has_value());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    EXPECT_EQ(ds.y_f(k), ds.t[i] == 1 ? ds.oracle->y1(k) : ds.oracle->y0(k));
    EXPECT_EQ(ds.oracle->ite(k), ds.oracle->y1(k) - ds.oracle->y0(k));
  }
}

TEST(BuildCovariancesTest, OneDimensionIsUnit) {
  Rng rng(1);
  const auto cov = build_covariances(rng, 1);
  for (const Matrix* m : {&cov.sigma_A, &cov.sigma_0, &cov.sigma_1}) {
    ASSERT_EQ(m->rows(), 1);
    EXPECT_DOUBLE_EQ((*m)(0, 0), 1.0);
  }
}

TEST(BuildCovariancesTest, TraceSymmetryAndPsdForManyDimensions) {
  Rng rng(2);
  for (std::size_t d : {1u, 2u, 3u, 5u, 10u, 20u, 35u, 50u}) {
    const auto cov = build_covariances(rng, d);
    for (const Matrix* m : {&cov.sigma_A, &cov.sigma_0, &cov.sigma_1}) {
      EXPECT_NEAR(m->trace(), 1.0, 1e-9) << "d = " << d;
      EXPECT_LE((*m - m->transpose()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_NO_THROW(cholesky(*m));
    }
  }
}

TEST(BuildCovariancesTest, EigenvaluesRecoveredThroughKnownBasis) {
  Rng rng(3);
  const auto cov = build_covariances(rng, 5);
  const Vector recovered0 = (cov.q_B.transpose() * cov.sigma_0 * cov.q_B).diagonal();
  const Vector recovered1 = (cov.q_B.transpose() * cov.sigma_1 * cov.q_B).diagonal();
  const Vector recoveredA = (cov.q_A.transpose() * cov.sigma_A * cov.q_A).diagonal();
  EXPECT_LE((recovered0 - cov.lambda_0).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((recovered1 - cov.lambda_1).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((recoveredA - cov.lambda_A).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(std::is_sorted(cov.lambda_0.begin(), cov.lambda_0.end()));
  EXPECT_TRUE(std::is_sorted(cov.lambda_A.begin(), cov.lambda_A.end()));
  EXPECT_TRUE(std::is_sorted(cov.lambda_1.begin(), cov.lambda_1.end(), std::greater<>()));
  // independent check: the symmetric eigen-solver sees the same spectrum
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov.sigma_0);
  EXPECT_LE((es.eigenvalues() - cov.lambda_0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GenTreatmentTest, Bounds) {
  Rng rng(4);
  EXPECT_EQ(gen_treatment(rng, 5, 0.0), std::vector<int>(5, 0));
  EXPECT_EQ(gen_treatment(rng, 5, 1.0), std::vector<int>(5, 1));
  const auto t = gen_treatment(rng, 200, 0.5);
  const auto ones = std::count(t.begin(), t.end(), 1);
  EXPECT_GE(ones, 60);
  EXPECT_LE(ones, 140);
}

TEST(GenFeaturesTest, DegenerateCovarianceCollapsesToMeans) {
  Rng rng(5);
  auto spec = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 2.0);
  auto cov = build_covariances(rng, 3);
  cov.sigma_A *= 1e-12;
  cov.sigma_0 *= 1e-12;
  cov.sigma_1 *= 1e-12;
  const std::vector<int> t{0, 1, 1, 0};
  for (auto fm : {FeatureModel::ModelA, FeatureModel::ModelB}) {
    spec.feature_model = fm;
    const Matrix x = gen_features(rng, spec, cov, t);
    for (std::size_t i = 0; i < t.size(); ++i)
      EXPECT_LE((x.row(static_cast<Eigen::Index>(i)).transpose() - spec.mean(t[i])).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(GenFeaturesTest, ModelAGroupMeans) {
  Rng rng(6);
  GenSpec spec = GenSpec::symmetric(2, FeatureModel::ModelA, OutcomeModel::Linear, 0.0);
  spec.mu0 << -1.0, 0.5;
  spec.mu1 << 2.0, -0.25;
  const auto cov = build_covariances(rng, 2);
  const auto t = gen_treatment(rng, 10000, 0.5);
  const Matrix x = gen_features(rng, spec, cov, t);
  for (int g : {0, 1}) {
    Vector sum = Vector::Zero(2);
    double count = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] == g) {
        sum += x.row(static_cast<Eigen::Index>(i)).transpose();
        ++count;
      }
    EXPECT_LE((sum / count - spec.mean(g)).cwiseAbs().maxCoeff(), 0.1) << "group " << g;
  }
}

TEST(GenFeaturesTest, ModelBMixtureCovariance) {
  Rng rng(7);
  const GenSpec spec = GenSpec::symmetric(2, FeatureModel::ModelB, OutcomeModel::Linear, 1.0);
  const auto cov = build_covariances(rng, 2);
  const auto t = gen_treatment(rng, 10000, 0.5);
  const Matrix x = gen_features(rng, spec, cov, t);
  const Matrix expected = 0.5 * cov.sigma_0 + 0.5 * cov.sigma_1;
  for (int g : {0, 1}) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] == g) rows.push_back(static_cast<Eigen::Index>(i));
    Matrix xg(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t k = 0; k < rows.size(); ++k) xg.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
    const Matrix centered = xg.rowwise() - xg.colwise().mean();
    const Matrix sample_cov = centered.transpose() * centered / static_cast<double>(xg.rows() - 1);
    EXPECT_LE((sample_cov - expected).cwiseAbs().maxCoeff(), 0.1) << "group " << g;
  }
}

TEST(GenFeaturesTest, DimensionMismatch) {
  Rng rng(8);
  const GenSpec spec = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  const auto cov = build_covariances(rng, 2);
  try {
    gen_features(rng, spec, cov, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(GenOutcomeParamsTest, ShapesRangeDeterminism) {
  GenSpec lin = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  Rng rng(9);
  const auto p = gen_outcome_params(rng, lin);
  EXPECT_FALSE(p.quadratic());
  EXPECT_EQ(p.A0.size(), 0);
  EXPECT_EQ(p.A1.size(), 0);

  GenSpec quad = lin;
  quad.outcome_model = OutcomeModel::Quadratic;
  Rng a(10), b(10);
  const auto q = gen_outcome_params(a, quad);
  const auto q2 = gen_outcome_params(b, quad);
  ASSERT_TRUE(q.quadratic());
  for (const Matrix* m : {&q.A0, &q.A1}) {
    EXPECT_GE(m->minCoeff(), 0.0);
    EXPECT_LT(m->maxCoeff(), 1.0);
  }
  for (const Vector* v : {&q.b0, &q.b1}) {
    EXPECT_GE(v->minCoeff(), 0.0);
    EXPECT_LT(v->maxCoeff(), 1.0);
  }
  EXPECT_GE(q.c0, 0.0);
  EXPECT_LT(q.c1, 1.0);
  EXPECT_EQ(q.A0, q2.A0);
  EXPECT_EQ(q.A1, q2.A1);
  EXPECT_EQ(q.b0, q2.b0);
  EXPECT_EQ(q.b1, q2.b1);
  EXPECT_EQ(q.c0, q2.c0);
  EXPECT_EQ(q.c1, q2.c1);

  GenSpec wide = quad;
  wide.coeff_lo = -1.0;
  Rng c(11);
  const auto w = gen_outcome_params(c, wide);
  EXPECT_LT(w.A0.minCoeff(), 0.0);
  EXPECT_GE(w.A0.minCoeff(), -1.0);
}

TEST(GenOutcomesTest, ConstantEffectWithoutNoise) {
  GenSpec spec = GenSpec::symmetric(2, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  spec.sigma_noise = 0.0;
  OutcomeParams p;
  p.b0 = Vector::Zero(2);
  p.b1 = Vector::Zero(2);
  p.c0 = 1.0;
  p.c1 = 3.0;
  Rng rng(12);
  const Matrix x = sample_normal_matrix(rng, 6, 2);
  const std::vector<int> t{0, 1, 0, 1, 1, 0};
  const auto o = gen_outcomes(rng, spec, p, x, t);
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(o.ite(i), 2.0);
}

TEST(GenOutcomesTest, QuadraticHandEvaluation) {
  GenSpec spec = GenSpec::symmetric(2, FeatureModel::ModelA, OutcomeModel::Quadratic, 1.0);
  spec.sigma_noise = 0.0;
  OutcomeParams p;
  p.A0 = Matrix::Zero(2, 2);
  p.A1 = Matrix::Identity(2, 2);
  p.b0 = p.b1 = Vector::Zero(2);
  Rng rng(13);
  const Matrix x = Matrix::Ones(3, 2);
  const auto o = gen_outcomes(rng, spec, p, x, {0, 1, 1});
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(o.y1(i), 2.0);
    EXPECT_EQ(o.y0(i), 0.0);
    EXPECT_EQ(o.ite(i), 2.0);
  }
  EXPECT_EQ(o.y_f(0), 0.0);
  EXPECT_EQ(o.y_f(1), 2.0);
}

TEST(GenOutcomesTest, NoiseVariance) {
  GenSpec spec = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  Rng rng(14);
  const auto p = gen_outcome_params(rng, spec);
  const Matrix x = sample_normal_matrix(rng, 10000, 3);
  const std::vector<int> t(10000, 0);
  const auto o = gen_outcomes(rng, spec, p, x, t);
  Vector resid(10000);
  for (Eigen::Index i = 0; i < 10000; ++i) resid(i) = o.y0(i) - p.mean(0, x.row(i).transpose());
  EXPECT_NEAR(testing::sample_variance(resid), 1.0, 0.05);
}

TEST(GenOutcomesTest, DeterministicWithoutNoise) {
  GenSpec spec = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  spec.sigma_noise = 0.0;
  Rng rng(15);
  const auto p = gen_outcome_params(rng, spec);
  const Matrix x = sample_normal_matrix(rng, 20, 3);
  const auto t = gen_treatment(rng, 20, 0.5);
  Rng r1(100), r2(200);
  const auto a = gen_outcomes(r1, spec, p, x, t);
  const auto b = gen_outcomes(r2, spec, p, x, t);
  EXPECT_EQ(a.y_f, b.y_f);
  EXPECT_EQ(a.ite, b.ite);
}

TEST(GenerateTest, DeterministicAndConsistent) {
  const GenSpec spec = GenSpec::symmetric(5, FeatureModel::ModelB, OutcomeModel::Quadratic, 0.5);
  const auto a = generate(77, spec, 200, 100);
  const auto b = generate(77, spec, 200, 100);
  EXPECT_EQ(dataset_to_csv(a.train), dataset_to_csv(b.train));
  EXPECT_EQ(dataset_to_csv(a.test), dataset_to_csv(b.test));
  EXPECT_EQ(a.train.size(), 200u);
  EXPECT_EQ(a.test.size(), 100u);
  expect_identities(a.train);
  expect_identities(a.test);
}

TEST(GenerateTest, GroupsMeetMinimumSize) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GenSpec spec = GenSpec::symmetric(35, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
    const auto g = generate(seed, spec, 60, 10);
    const std::size_t treated = g.train.count_treated();
    EXPECT_GE(treated, min_group_size(35));
    EXPECT_GE(g.train.size() - treated, min_group_size(35));
  }
}

TEST(GenerateTest, ImpossibleGuardFails) {
  const GenSpec spec = GenSpec::symmetric(35, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  EXPECT_THROW(generate(1, spec, 10, 10), Error);
}

TEST(GenerateTest, TrainAndTestRowsDisjoint) {
  const GenSpec spec = GenSpec::symmetric(2, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  const auto g = generate(5, spec, 200, 100);
  std::set<std::pair<double, double>> seen;
  for (Eigen::Index i = 0; i < g.train.x.rows(); ++i) seen.insert({g.train.x(i, 0), g.train.x(i, 1)});
  for (Eigen::Index i = 0; i < g.test.x.rows(); ++i)
    EXPECT_EQ(seen.count({g.test.x(i, 0), g.test.x(i, 1)}), 0u);
}

TEST(GenerateTest, InvalidSpecRejected) {
  GenSpec spec = GenSpec::symmetric(3, FeatureModel::ModelA, OutcomeModel::Linear, 1.0);
  spec.treatment_p = 1.0;
  EXPECT_THROW(generate(1, spec, 50, 10), Error);
  spec.treatment_p = 0.5;
  spec.coeff_lo = 2.0;
  EXPECT_THROW(generate(1, spec, 50, 10), Error);
}

TEST(DatasetCsvTest, RoundTripIsLossless) {
  Rng rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    const GenSpec spec = GenSpec::symmetric(d, FeatureModel::ModelA, OutcomeModel::Quadratic, rng.uniform());
    const auto g = generate(rng.next_u64(), spec, 30, 5);
    const std::string text = dataset_to_csv(g.train);
    std::istringstream in(text);
    const Dataset back = read_dataset_csv(in);
    EXPECT_EQ(back.x, g.train.x);
    EXPECT_EQ(back.t, g.train.t);
    EXPECT_EQ(back.y_f, g.train.y_f);
    ASSERT_TRUE(back.oracle.has_value());
    EXPECT_EQ(back.oracle->ite, g.train.oracle->ite);
    EXPECT_EQ(dataset_to_csv(back), text);
  }
}

TEST(DatasetCsvTest, HeaderAndOptionalOracle) {
  Dataset ds;
  ds.x = Matrix::Zero(1, 2);
  ds.x(0, 0) = 0.1;
  ds.t = {1};
  ds.y_f = Vector::Constant(1, 2.5);
  EXPECT_EQ(dataset_to_csv(ds), "x1,x2,t,y_f\n0.10000000000000001,0,1,2.5\n");
  std::istringstream in("x1,t,y_f\n1.5,0,3\n-2,1,4\n");
  const Dataset back = read_dataset_csv(in);
  EXPECT_FALSE(back.oracle.has_value());
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.t, (std::vector<int>{0, 1}));
}

TEST(DatasetCsvTest, SchemaErrors) {
  for (const char* text : {"", "a,b\n", "x1,t,y_f\n1,2,3\n", "x1,t,y_f\n1,0\n", "x1,t,y_f,y0\n1,0,1,1\n",
                           "x1,t,y_f\nfoo,0,1\n"}) {
    std::istringstream in(text);
    try {
      read_dataset_csv(in);
      FAIL() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaError) << text;
    }
  }
}

}  // namespace
}  // namespace irmite
