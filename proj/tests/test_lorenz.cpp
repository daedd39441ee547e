#include <gtest/gtest.h>

#include <cmath>

#include "predvar/lorenz.hpp"
#include "support.hpp"

using namespace predvar;

namespace {

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

TEST(Lorenz, MatchesReferenceIntegrator) {
  LorenzConfig c;
  c.discard = 10;
  const Matrix ours = integrate_lorenz(c, 200).data();
  const Matrix ref = predvar::testing::lorenz_reference(c, 200, 1);
  EXPECT_LT((ours - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lorenz, BoundingBox) {
  const Matrix x = integrate_lorenz(LorenzConfig{}, 10000).data();
  EXPECT_LE(x.col(0).cwiseAbs().maxCoeff(), 25.0);
  EXPECT_LE(x.col(1).cwiseAbs().maxCoeff(), 30.0);
  EXPECT_GE(x.col(2).minCoeff(), 0.0);
  EXPECT_LE(x.col(2).maxCoeff(), 55.0);
}

TEST(Lorenz, SubcriticalDecaysToOrigin) {
  LorenzConfig c;
  c.rho = 0.5;
  c.discard = 0;
  const Matrix x = integrate_lorenz(c, 10000).data();
  EXPECT_LT(x.row(9999).norm(), 1e-3);
}

TEST(Lorenz, StepHalving) {
  LorenzConfig c;
  c.discard = 0;
  LorenzConfig half = c;
  half.dt = c.dt / 2;
  const Matrix a = integrate_lorenz(c, 100).data();
  const Matrix b = integrate_lorenz(half, 200).data();
  // three significant digits of the state vector
  for (Eigen::Index k = 0; k < 100; ++k) {
    const double scale = std::max(1.0, a.row(k).cwiseAbs().maxCoeff());
    EXPECT_LT((a.row(k) - b.row(2 * k + 1)).cwiseAbs().maxCoeff(), 5e-4 * scale) << "step " << k;
  }
}

TEST(Lorenz, EulerDiffersFromRk4) {
  LorenzConfig c;
  c.integrator = Integrator::Euler;
  c.dt = 0.001;
  c.discard = 0;
  LorenzConfig r = c;
  r.integrator = Integrator::Rk4;
  const Matrix e = integrate_lorenz(c, 50).data();
  const Matrix k = integrate_lorenz(r, 50).data();
  EXPECT_GT((e - k).norm(), 0.0);
  EXPECT_LT((e - k).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Lorenz, DeterministicAndErrors) {
  EXPECT_EQ(integrate_lorenz(LorenzConfig{}, 50).data(), integrate_lorenz(LorenzConfig{}, 50).data());
  EXPECT_EQ(kind_of([] { integrate_lorenz(LorenzConfig{}, 0); }), ErrorKind::InvalidInput);
  LorenzConfig bad;
  bad.dt = 0;
  EXPECT_EQ(kind_of([&] { integrate_lorenz(bad, 5); }), ErrorKind::ConfigError);
  LorenzConfig wild;
  wild.dt = 5.0;
  wild.discard = 0;
  EXPECT_EQ(kind_of([&] { integrate_lorenz(wild, 200); }), ErrorKind::IntegrationError);
}

TEST(CaseStudy, LoadingAngles) {
  PredVarParams p;
  p.loadings = case_study_loadings();
  p.static_loadings = case_study_static_loadings();
  const auto angles = canonical_angles(weights_from_loadings(p).dlv, p.loadings);
  ASSERT_EQ(angles.size(), 3u);
  EXPECT_NEAR(angles[0], 23.99, 0.05);
  EXPECT_NEAR(angles[1], 51.27, 0.05);
  EXPECT_NEAR(angles[2], 60.97, 0.05);
}

TEST(CaseStudy, ShapesSplitsAndIdentity) {
  const SyntheticDataset d = paper_case_study(4);
  EXPECT_EQ(d.y.length(), 10000u);
  EXPECT_EQ(d.y.dim(), 6u);
  EXPECT_EQ(d.v_true.length(), 10000u);
  EXPECT_EQ(d.v_true.dim(), 3u);
  EXPECT_EQ(d.train.first, 0u);
  EXPECT_EQ(d.train.count, 3000u);
  EXPECT_EQ(d.test.first, 7000u);
  EXPECT_EQ(d.test.count, 3000u);
  EXPECT_LE(d.train.end(), d.test.first);
  const Matrix lhs = d.y.data() - d.v_true.data() * d.params_true.loadings.transpose();
  const Matrix rhs = d.static_noise.data() * d.params_true.static_loadings.transpose();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_FALSE(d.params_true.has_dynamics());
}

TEST(CaseStudy, CenteredLatentAndMatchedNoise) {
  const SyntheticDataset d = paper_case_study(5);
  EXPECT_LT(d.v_true.data().colwise().mean().cwiseAbs().maxCoeff(), 1e-9);
  const Matrix lat = sample_covariance(d.v_true);
  const Matrix& sigma = d.params_true.static_noise_cov;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sigma(i, i), lat(i, i), 1e-9 * lat(i, i));
  EXPECT_EQ(sigma(0, 1), 0.0);
  const Matrix c = sample_covariance(d.static_noise);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(c(i, j) - sigma(i, j)), 0.1 * std::sqrt(sigma(i, i) * sigma(j, j)));
    }
  }
}

TEST(CaseStudy, NoiseVarianceReadings) {
  CaseStudyConfig full;
  full.noise_variance = NoiseVariance::Full;
  CaseStudyConfig total;
  total.noise_variance = NoiseVariance::Total;
  const SyntheticDataset a = paper_case_study(6, full);
  const SyntheticDataset b = paper_case_study(6, total);
  const Matrix lat = sample_covariance(a.v_true);
  EXPECT_LT((a.params_true.static_noise_cov - lat).norm(), 1e-9 * lat.norm());
  EXPECT_LT((b.params_true.static_noise_cov - lat.trace() / 3.0 * Matrix::Identity(3, 3)).norm(), 1e-9 * lat.norm());
}

TEST(CaseStudy, DeterministicPerSeed) {
  const SyntheticDataset a = paper_case_study(7);
  const SyntheticDataset b = paper_case_study(7);
  const SyntheticDataset c = paper_case_study(8);
  EXPECT_EQ(a.y.data(), b.y.data());
  EXPECT_NE(a.y.data(), c.y.data());
  EXPECT_EQ(a.v_true.data(), c.v_true.data());
}

TEST(OrthCaseStudy, SharedStreamsAndCleanSignalChannels) {
  const SyntheticDataset a = paper_case_study(9);
  const SyntheticDataset o = orth_case_study(9);
  EXPECT_EQ(a.v_true.data(), o.v_true.data());
  EXPECT_EQ(a.static_noise.data(), o.static_noise.data());
  EXPECT_EQ(Matrix(o.y.data().leftCols(3)), o.v_true.data());
  EXPECT_EQ(Matrix(o.y.data().rightCols(3)), o.static_noise.data());
  for (double angle : canonical_angles(weights_from_loadings(o.params_true).dlv, o.params_true.loadings)) {
    EXPECT_LT(angle, 1e-6);
  }
}

TEST(MixCaseStudy, Errors) {
  const TimeSeries latent = integrate_lorenz(LorenzConfig{}, 100);
  CaseStudyConfig small;
  small.samples = 100;
  small.train = 60;
  small.test = 60;
  EXPECT_EQ(kind_of([&] {
              mix_case_study(latent, case_study_loadings(), case_study_static_loadings(), 1, small, "x");
            }),
            ErrorKind::ConfigError);
  small.train = 30;
  small.test = 30;
  EXPECT_EQ(kind_of([&] {
              mix_case_study(latent, Matrix::Identity(6, 2), Matrix::Identity(6, 4), 1, small, "x");
            }),
            ErrorKind::DimensionError);
}
