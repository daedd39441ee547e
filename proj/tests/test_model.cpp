#include <gtest/gtest.h>

#include <cmath>

#include "predvar/lorenz.hpp"
#include "predvar/model.hpp"
#include "support.hpp"

using namespace predvar;
using predvar::testing::gaussian;

namespace {

PredVarParams orthogonal_params() {
  PredVarParams p;
  p.loadings = case_study_loadings();
  p.static_loadings = orthogonal_static_loadings();
  p.var_coeffs = {0.5 * Matrix::Identity(3, 3)};
  p.innovation_cov = Matrix::Identity(3, 3);
  p.static_noise_cov = Matrix::Identity(3, 3);
  return p;
}

template <typename Fn>
ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST(Weights, OrthonormalPartition) {
  const WeightMatrices w = weights_from_loadings(orthogonal_params());
  EXPECT_LT((w.dlv - case_study_loadings()).norm(), 1e-15);
  EXPECT_LT((w.static_ - orthogonal_static_loadings()).norm(), 1e-15);
}

TEST(Weights, TwoByTwoByHand) {
  Matrix p(2, 1), pbar(2, 1), r(2, 1), rbar(2, 1);
  p << 1, 0;
  pbar << 1, 1;
  r << 1, -1;
  rbar << 0, 1;
  const WeightMatrices w = weights_from_loadings(p, pbar);
  EXPECT_LT((w.dlv - r).norm(), 1e-15);
  EXPECT_LT((w.static_ - rbar).norm(), 1e-15);
}

TEST(Weights, DualityOnRandomLoadings) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + trial % 9;
    const int l = 1 + trial % (p - 1);
    const Matrix full = gaussian(rng, p, p);
    const WeightMatrices w = weights_from_loadings(full.leftCols(l), full.rightCols(p - l));
    Matrix rr(p, p);
    rr << w.dlv, w.static_;
    EXPECT_LT((rr.transpose() * full - Matrix::Identity(p, p)).norm(), 1e-9 * std::max(1.0, full.norm() * rr.norm()));
  }
}

TEST(Weights, SingularLoadings) {
  Matrix p(2, 1), pbar(2, 1);
  p << 1, 1;
  pbar << 2, 2;
  EXPECT_EQ(kind_of([&] { weights_from_loadings(p, pbar); }), ErrorKind::SingularLoadings);
}

TEST(ObliqueProjector, Examples) {
  const Matrix e1 = Matrix::Identity(2, 2).col(0);
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0;
  EXPECT_LT((oblique_projector(e1, e1) - expected).norm(), 1e-15);

  Matrix p(2, 1), r(2, 1);
  p << 1, 0;
  r << 1, -1;
  const Matrix pi = oblique_projector(p, r);
  expected << 1, -1, 0, 0;
  EXPECT_LT((pi - expected).norm(), 1e-15);
  EXPECT_LT((pi * pi - pi).norm(), 1e-15);

  EXPECT_EQ(kind_of([&] { oblique_projector(p, 2 * r); }), ErrorKind::NotDualPair);
}

TEST(ObliqueProjector, CaseStudyIsIdempotent) {
  const WeightMatrices w = weights_from_loadings(case_study_loadings(), case_study_static_loadings());
  const Matrix pi = oblique_projector(case_study_loadings(), w.dlv);
  EXPECT_LT((pi * pi - pi).norm(), 1e-10);
  EXPECT_GT(pi.norm(), std::sqrt(3.0));  // oblique projector
}

TEST(Simulate, NoiselessFixedPoint) {
  PredVarParams p = orthogonal_params();
  p.var_coeffs = {Matrix::Zero(3, 3)};
  p.innovation_cov = Matrix::Zero(3, 3);
  p.static_noise_cov = Matrix::Zero(3, 3);
  const SimulatedSeries s = simulate(p, 50, 1);
  EXPECT_EQ(s.y.data().norm(), 0.0);
  EXPECT_EQ(s.y.length(), 51u);
}

TEST(Simulate, Ar1StationaryVariance) {
  PredVarParams p;
  p.loadings = Matrix::Ones(2, 1);
  p.static_loadings = Matrix(2, 1);
  p.static_loadings << 1, -1;
  p.var_coeffs = {Matrix::Constant(1, 1, 0.5)};
  p.innovation_cov = Matrix::Ones(1, 1);
  p.static_noise_cov = Matrix::Ones(1, 1);
  const SimulatedSeries s = simulate(p, 100000, 42);
  const double var = sample_covariance(s.v)(0, 0);
  EXPECT_NEAR(var, 1.0 / (1.0 - 0.25), 0.05 * 4.0 / 3.0);
}

TEST(Simulate, DeterministicAndConsistentWithModel) {
  const PredVarParams p = random_params(5, 2, 2, 3);
  const SimulatedSeries a = simulate(p, 300, 9);
  const SimulatedSeries b = simulate(p, 300, 9);
  EXPECT_EQ(a.y.data(), b.y.data());
  EXPECT_EQ(a.v.data(), b.v.data());
  EXPECT_NE(simulate(p, 300, 10).y.data(), a.y.data());
  // y - v P^T lies in span(Pbar)
  const WeightMatrices w = weights_from_loadings(p);
  const Matrix resid = a.y.data() - a.v.data() * p.loadings.transpose();
  EXPECT_LT((resid * w.dlv).norm(), 1e-10 * resid.norm());
}

TEST(Simulate, Errors) {
  PredVarParams p = orthogonal_params();
  p.var_coeffs = {1.1 * Matrix::Identity(3, 3)};
  EXPECT_EQ(kind_of([&] { simulate(p, 10, 1); }), ErrorKind::UnstableDynamics);
  p = orthogonal_params();
  p.innovation_cov(0, 0) = -1.0;
  EXPECT_EQ(kind_of([&] { simulate(p, 10, 1); }), ErrorKind::InvalidCovariance);
}

TEST(OneStepPredict, Examples) {
  const std::vector<Matrix> zero{Matrix::Zero(2, 2)};
  const std::vector<Vector> h1{Vector::Ones(2)};
  EXPECT_EQ(one_step_predict(zero, h1).norm(), 0.0);
  const std::vector<Matrix> eye{Matrix::Identity(2, 2)};
  EXPECT_EQ(one_step_predict(eye, h1), h1[0]);
  const std::vector<Matrix> b{Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.25)};
  const std::vector<Vector> h2{Vector::Constant(1, 2.0), Vector::Constant(1, 4.0)};
  EXPECT_DOUBLE_EQ(one_step_predict(b, h2)(0), 2.0);
  EXPECT_EQ(kind_of([&] { one_step_predict(b, h1); }), ErrorKind::DimensionError);
}

TEST(ReducedRankVar, Examples) {
  PredVarParams p = orthogonal_params();
  EXPECT_LT((to_reduced_rank_var(p).residual_cov - Matrix::Identity(6, 6)).norm(), 1e-15);
  p.var_coeffs = {Matrix::Zero(3, 3)};
  EXPECT_EQ(to_reduced_rank_var(p).coeffs[0].norm(), 0.0);
}

TEST(ReducedRankVar, RankEll) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PredVarParams p = random_params(6, 3, 2, seed);
    for (const Matrix& a : to_reduced_rank_var(p).coeffs) {
      const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
      EXPECT_LT(sv(3), 1e-8 * sv(0));
      EXPECT_GT(sv(2), 1e-8 * sv(0));
    }
  }
}

TEST(EquivalentTransform, IdentityAndScaling) {
  const PredVarParams p = random_params(5, 2, 2, 1);
  const PredVarParams same = equivalent_transform(p, Matrix::Identity(2, 2), Matrix::Identity(3, 3));
  EXPECT_LT((same.loadings - p.loadings).norm(), 1e-15);
  const PredVarParams doubled = equivalent_transform(p, 2 * Matrix::Identity(2, 2), Matrix::Identity(3, 3));
  EXPECT_LT((doubled.loadings - 0.5 * p.loadings).norm(), 1e-14);
  EXPECT_LT((doubled.innovation_cov - 4 * p.innovation_cov).norm(), 1e-13);
  for (std::size_t j = 0; j < p.order(); ++j) EXPECT_LT((doubled.var_coeffs[j] - p.var_coeffs[j]).norm(), 1e-14);
  EXPECT_EQ(kind_of([&] { equivalent_transform(p, Matrix::Zero(2, 2), Matrix::Identity(3, 3)); }),
            ErrorKind::SingularTransform);
}

TEST(EquivalentTransform, ReducedRankFormInvariant) {
  std::mt19937_64 rng(23);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const PredVarParams p = random_params(6, 3, 2, seed);
    const Matrix m = predvar::testing::conditioned(rng, 3, 3);
    const Matrix mbar = predvar::testing::conditioned(rng, 3, 3);
    const PredVarParams q = equivalent_transform(p, m, mbar);
    const ReducedRankVar a = to_reduced_rank_var(p);
    const ReducedRankVar b = to_reduced_rank_var(q);
    EXPECT_LT((a.residual_cov - b.residual_cov).norm(), 1e-9);
    for (std::size_t j = 0; j < a.coeffs.size(); ++j) EXPECT_LT((a.coeffs[j] - b.coeffs[j]).norm(), 1e-9);
    const Matrix pi_a = p.loadings * weights_from_loadings(p).dlv.transpose();
    const Matrix pi_b = q.loadings * weights_from_loadings(q).dlv.transpose();
    EXPECT_LT((pi_a - pi_b).norm(), 1e-9);
  }
}

TEST(Companion, SpectralRadiusOfScalarAr2) {
  // v_k = 0.5 v_{k-1} + 0.25 v_{k-2}: roots of z^2 - 0.5 z - 0.25
  const std::vector<Matrix> b{Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.25)};
  const double expected = (0.5 + std::sqrt(0.25 + 1.0)) / 2.0;
  EXPECT_NEAR(spectral_radius(companion_matrix(b)), expected, 1e-14);
}

TEST(RandomParams, StableAndValid) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PredVarParams p = random_params(6, 3, 2, seed, 0.95, 0.7);
    EXPECT_NO_THROW(p.validate());
    const double rho = spectral_radius(companion_matrix(p.var_coeffs));
    EXPECT_LT(rho, 0.95 + 1e-12);
    EXPECT_GE(rho, 0.7 * 0.95 - 1e-12);
  }
  EXPECT_EQ(random_params(4, 2, 1, 5).loadings, random_params(4, 2, 1, 5).loadings);
  EXPECT_EQ(kind_of([] { random_params(3, 3, 1, 0); }), ErrorKind::ConfigError);
}
