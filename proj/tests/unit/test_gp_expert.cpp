#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"
#include "egpbo/ensemble.hpp"
#include "egpbo/gp_expert.hpp"
#include "oracles.hpp"

using namespace egpbo;

namespace {

KernelSpec spec_with(double ell, double amp, double noise) {
  KernelSpec s;
  s.lengthscales = Eigen::VectorXd::Constant(1, ell);
  s.amplitude = amp;
  s.noise_var = noise;
  return s;
}

ExpertPosterior fold(ExpertPosterior e, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) e.update(X.row(i).transpose(), y[i]);
  return e;
}

}  // namespace

TEST(InitExpert, PriorState) {
  const auto e = init_expert(spec_with(0.5, 2.0, 0.1), 3, 2, 1);
  EXPECT_EQ(e.theta_cov(), 2.0 * Eigen::MatrixXd::Identity(6, 6));
  EXPECT_EQ(e.theta_mean(), Eigen::VectorXd::Zero(6));
  EXPECT_EQ(e.log_evidence(), 0.0);
  EXPECT_EQ(log_evidence(e), 0.0);
  EXPECT_EQ(e.n_obs(), 0u);
}

TEST(InitExpert, PriorPredictive) {
  const auto e = init_expert(spec_with(0.5, 2.0, 0.1), 7, 2, 1);
  const auto p = predictive(e, Eigen::Vector2d(0.3, 0.9));
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_NEAR(p.var, 2.1, 1e-12);
}

TEST(InitExpert, SameSeedSameMap) {
  const auto a = init_expert(spec_with(0.5, 1.0, 0.1), 20, 3, 77);
  const auto b = init_expert(spec_with(0.5, 1.0, 0.1), 20, 3, 77);
  EXPECT_EQ(a.map().spectral(), b.map().spectral());
}

TEST(BatchFit, EmptyDataReturnsPrior) {
  const auto e = init_expert(spec_with(0.5, 1.5, 0.1), 4, 2, 1);
  const auto f = batch_fit(e, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  EXPECT_EQ(f.theta_mean(), e.theta_mean());
  EXPECT_LE((f.theta_cov() - e.theta_cov()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(f.log_evidence(), 0.0);
}

TEST(BatchFit, SingleObservationClosedForm) {
  const double amp = 1.7, noise = 0.3, y1 = 0.8;
  const auto e = init_expert(spec_with(0.5, amp, noise), 6, 2, 3);
  const Eigen::VectorXd x1 = Eigen::Vector2d(0.2, 0.6);
  Eigen::MatrixXd X(1, 2);
  X.row(0) = x1.transpose();
  const auto f = batch_fit(e, X, Eigen::VectorXd::Constant(1, y1));
  const Eigen::VectorXd expected = amp * e.map().features(x1) * y1 / (amp + noise);
  EXPECT_LE((f.theta_mean() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BatchFit, MatchesExplicitInverseOracle) {
  Rng rng(4);
  const double amp = 0.8, noise = 0.05;
  const auto e = init_expert(spec_with(0.3, amp, noise), 10, 3, 9);
  const Eigen::MatrixXd X = oracle::uniform_points(25, 3, rng);
  Eigen::VectorXd y(25);
  for (Eigen::Index i = 0; i < 25; ++i) y[i] = standard_normal(rng);
  const auto f = batch_fit(e, X, y);
  const auto ref = oracle::rf_posterior(e.map().feature_matrix(X), y, amp, noise);
  EXPECT_LE(oracle::max_rel_diff(f.theta_mean(), ref.mean), 1e-9);
  EXPECT_LE(oracle::max_rel_diff(f.theta_cov(), ref.cov), 1e-9);
  EXPECT_NEAR(f.log_evidence(),
              oracle::rf_dense_evidence(e.map().feature_matrix(X), y, amp, noise), 1e-8);
}

TEST(BatchFit, EqualsRecursiveFold) {
  Rng rng(6);
  const auto e = init_expert(spec_with(0.4, 1.3, 0.02), 12, 2, 2);
  const Eigen::MatrixXd X = oracle::uniform_points(30, 2, rng);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y[i] = std::sin(6.0 * X(i, 0)) + 0.1 * standard_normal(rng);
  const auto batch = batch_fit(e, X, y);
  const auto rec = fold(e, X, y);
  EXPECT_LE(oracle::max_rel_diff(rec.theta_mean(), batch.theta_mean()), 1e-6);
  EXPECT_LE(oracle::max_rel_diff(rec.theta_cov(), batch.theta_cov()), 1e-6);
  EXPECT_LE(std::abs(rec.log_evidence() - batch.log_evidence()) /
                std::max(1.0, std::abs(batch.log_evidence())),
            1e-6);
  EXPECT_EQ(batch.n_obs(), 30u);
}

TEST(BatchFit, RowCountMismatchThrows) {
  const auto e = init_expert(spec_with(0.4, 1.0, 0.1), 4, 2, 2);
  EXPECT_THROW((void)batch_fit(e, Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)),
               ContractError);
}

TEST(Predictive, InterpolatesInLowNoiseLimit) {
  const auto e = init_expert(spec_with(0.3, 1.0, 1e-6), 50, 2, 5);
  const Eigen::VectorXd x0 = Eigen::Vector2d(0.4, 0.1);
  const auto f = recursive_update(e, x0, 1.3);
  EXPECT_NEAR(predictive(f, x0).mean, 1.3, 1e-3);
}

TEST(Predictive, VarianceNeverBelowNoise) {
  Rng rng(8);
  auto e = init_expert(spec_with(0.2, 1.0, 0.01), 15, 2, 5);
  const Eigen::MatrixXd X = oracle::uniform_points(60, 2, rng);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    e.update(X.row(i).transpose(), standard_normal(rng));
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd q = oracle::uniform_points(1, 2, rng).row(0).transpose();
      EXPECT_GE(e.predict(q).var, 0.01);
    }
  }
}

TEST(RecursiveUpdate, ZeroInnovationKeepsMean) {
  Rng rng(10);
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 8, 2, 5);
  const Eigen::MatrixXd X = oracle::uniform_points(5, 2, rng);
  for (Eigen::Index i = 0; i < 5; ++i) e.update(X.row(i).transpose(), standard_normal(rng));
  const Eigen::VectorXd x = Eigen::Vector2d(0.5, 0.5);
  const Eigen::VectorXd before = e.theta_mean();
  e.update(x, e.predict(x).mean);
  EXPECT_LE((e.theta_mean() - before).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RecursiveUpdate, TraceStrictlyDecreases) {
  Rng rng(12);
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 8, 3, 5);
  double trace = e.theta_cov().trace();
  for (int i = 0; i < 40; ++i) {
    e.update(oracle::uniform_points(1, 3, rng).row(0).transpose(), standard_normal(rng));
    EXPECT_LT(e.theta_cov().trace(), trace);
    trace = e.theta_cov().trace();
    EXPECT_LE((e.theta_cov() - e.theta_cov().transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(RecursiveUpdate, ValueSemanticsLeaveInputUntouched) {
  const auto e = init_expert(spec_with(0.3, 1.0, 0.05), 8, 2, 5);
  const auto f = recursive_update(e, Eigen::Vector2d(0.1, 0.2), 0.7);
  EXPECT_EQ(e.n_obs(), 0u);
  EXPECT_EQ(f.n_obs(), 1u);
}

TEST(RecursiveUpdate, PosteriorContractsAtObservedPoint) {
  Rng rng(13);
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 10, 2, 5);
  const Eigen::VectorXd x0 = Eigen::Vector2d(0.3, 0.3);
  e.update(x0, 0.2);
  double var = e.predict(x0).var;
  for (int i = 0; i < 30; ++i) {
    e.update(oracle::uniform_points(1, 2, rng).row(0).transpose(), standard_normal(rng));
    const double v = e.predict(x0).var;
    EXPECT_LE(v, var + 1e-12);
    var = v;
  }
}

TEST(RecursiveUpdate, NonPositivePredictiveVarianceThrowsAndKeepsState) {
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 3, 1, 5);
  e.set_state(Eigen::VectorXd::Zero(6), -Eigen::MatrixXd::Identity(6, 6), 0.0, 0);
  EXPECT_THROW(e.update(Eigen::VectorXd::Constant(1, 0.5), 1.0), NumericalError);
  EXPECT_EQ(e.n_obs(), 0u);
  EXPECT_EQ(e.theta_cov(), -Eigen::MatrixXd::Identity(6, 6));
}

TEST(LogEvidence, ChainRuleMatchesDenseOracle) {
  Rng rng(14);
  for (int c = 0; c < 20; ++c) {
    const int t = 1 + c % 20;
    const double amp = 0.5 + uniform01(rng), noise = 0.01 + 0.2 * uniform01(rng);
    auto e = init_expert(spec_with(0.2 + uniform01(rng), amp, noise), 10, 2, c);
    const Eigen::MatrixXd X = oracle::uniform_points(t, 2, rng);
    Eigen::VectorXd y(t);
    for (int i = 0; i < t; ++i) y[i] = standard_normal(rng);
    e = fold(e, X, y);
    EXPECT_NEAR(e.log_evidence(), oracle::rf_dense_evidence(e.map().feature_matrix(X), y, amp, noise),
                1e-6);
  }
}

TEST(LogEvidence, DecreasesWhenDensityBelowOne) {
  auto e = init_expert(spec_with(0.3, 1.0, 0.5), 10, 2, 5);
  const Eigen::VectorXd x = Eigen::Vector2d(0.2, 0.7);
  const auto p = e.predict(x);
  const double y = p.mean + 3.0 * std::sqrt(p.var);
  ASSERT_LT(std::exp(gaussian_log_density(y, p.mean, p.var)), 1.0);
  const double before = e.log_evidence();
  e.update(x, y);
  EXPECT_LT(e.log_evidence(), before);
}

TEST(RfLogEvidence, DualAndPrimalFormsAgreeWithOracle) {
  Rng rng(15);
  const auto e = init_expert(spec_with(0.3, 1.2, 0.07), 5, 2, 5);
  for (int t : {3, 10, 11, 40}) {
    const Eigen::MatrixXd X = oracle::uniform_points(t, 2, rng);
    Eigen::VectorXd y(t);
    for (int i = 0; i < t; ++i) y[i] = standard_normal(rng);
    const Eigen::MatrixXd Phi = e.map().feature_matrix(X);
    EXPECT_NEAR(rf_log_evidence(Phi, y, 1.2, 0.07), oracle::rf_dense_evidence(Phi, y, 1.2, 0.07),
                1e-8);
  }
}

TEST(Predictive, CalibratedOnDataFromOwnPrior) {
  Rng rng(16);
  const double amp = 1.0, noise = 0.1;
  auto e = init_expert(spec_with(0.2, amp, noise), 20, 2, 8);
  Eigen::VectorXd theta(40);
  for (Eigen::Index i = 0; i < 40; ++i) theta[i] = std::sqrt(amp) * standard_normal(rng);
  double sum_sq = 0.0;
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd x = oracle::uniform_points(1, 2, rng).row(0).transpose();
    const double y = e.map().features(x).dot(theta) + std::sqrt(noise) * standard_normal(rng);
    const auto p = e.predict(x);
    const double z = (y - p.mean) / std::sqrt(p.var);
    sum_sq += z * z;
    e.update(x, y);
  }
  const double var = sum_sq / 500.0;
  EXPECT_GE(var, 0.8);
  EXPECT_LE(var, 1.2);
}

TEST(SampleTheta, DegenerateCovarianceReturnsMean) {
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 4, 2, 5);
  const Eigen::VectorXd mean = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  e.set_state(mean, Eigen::MatrixXd::Zero(8, 8), 0.0, 3);
  Rng rng(1);
  EXPECT_LE((sample_theta(e, rng) - mean).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(SampleTheta, EmpiricalMeanConverges) {
  Rng data(17);
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 5, 2, 5);
  const Eigen::MatrixXd X = oracle::uniform_points(6, 2, data);
  for (Eigen::Index i = 0; i < 6; ++i) e.update(X.row(i).transpose(), standard_normal(data));
  Rng rng(2);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(10);
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += sample_theta(e, rng);
  acc /= n;
  EXPECT_LE((acc - e.theta_mean()).norm(), 3.0 * std::sqrt(e.theta_cov().trace() / n));
}

TEST(SampleTheta, SameSeedSameDraw) {
  const auto e = init_expert(spec_with(0.3, 1.0, 0.05), 5, 2, 5);
  Rng a(99), b(99);
  EXPECT_EQ(sample_theta(e, a), sample_theta(e, b));
}

TEST(JitteredCholesky, FailsOnNegativeDefiniteInput) {
  EXPECT_THROW((void)jittered_cholesky(-Eigen::MatrixXd::Identity(3, 3)), NumericalError);
}

TEST(ExpertSerialization, RoundTrip) {
  Rng rng(18);
  auto e = init_expert(spec_with(0.3, 1.0, 0.05), 6, 2, 5);
  const Eigen::MatrixXd X = oracle::uniform_points(7, 2, rng);
  for (Eigen::Index i = 0; i < 7; ++i) e.update(X.row(i).transpose(), standard_normal(rng));
  const auto back = expert_from_json(nlohmann::json::parse(expert_to_json(e).dump()));
  EXPECT_EQ(back.theta_mean(), e.theta_mean());
  EXPECT_LE((back.theta_cov() - e.theta_cov()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(back.log_evidence(), e.log_evidence());
  EXPECT_EQ(back.n_obs(), e.n_obs());
  EXPECT_EQ(back.map().spectral(), e.map().spectral());
}
