#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"
#include "egpbo/ensemble.hpp"
#include "oracles.hpp"

using namespace egpbo;

namespace {

KernelSpec rbf(double ell, bool learn = true) {
  KernelSpec s;
  s.lengthscales = Eigen::VectorXd::Constant(1, ell);
  s.learn_lengthscales = learn;
  return s;
}

Dataset wavy_data(std::size_t n, Eigen::Index d, Rng& rng) {
  Dataset data(Box::unit(d));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd x = oracle::uniform_points(1, d, rng).row(0).transpose();
    data.append(x, std::sin(7.0 * x[0]) + 0.5 * x.sum() + 0.05 * standard_normal(rng));
  }
  return data;
}

std::vector<Observation> wavy_batch(std::size_t n, Eigen::Index d, Rng& rng) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd x = oracle::uniform_points(1, d, rng).row(0).transpose();
    out.push_back({x, std::sin(7.0 * x[0]) + 0.5 * x.sum() + 0.05 * standard_normal(rng)});
  }
  return out;
}

double weight_sum(const EgpState& s) { return s.weights().sum(); }

void expect_same_state(const EgpState& a, const EgpState& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.log_weights(), b.log_weights());
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a.expert(m).theta_mean(), b.expert(m).theta_mean());
    EXPECT_EQ(a.expert(m).theta_cov(), b.expert(m).theta_cov());
    EXPECT_EQ(a.expert(m).log_evidence(), b.expert(m).log_evidence());
    EXPECT_TRUE(a.expert(m).spec() == b.expert(m).spec());
  }
  EXPECT_EQ(a.data().y_raw(), b.data().y_raw());
}

}  // namespace

TEST(FloorAndNormalize, DensityRatioThreeToOne) {
  Eigen::VectorXd lw(2);
  lw << std::log(0.5) + std::log(3.0), std::log(0.5) + std::log(1.0);
  floor_and_normalize(lw, 0.0);
  EXPECT_NEAR(std::exp(lw[0]), 0.75, 1e-15);
  EXPECT_NEAR(std::exp(lw[1]), 0.25, 1e-15);
}

TEST(FloorAndNormalize, CommonLikelihoodScaleIsIrrelevant) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd lw(5);
    for (Eigen::Index m = 0; m < 5; ++m) lw[m] = 30.0 * standard_normal(rng);
    Eigen::VectorXd shifted = lw.array() + (200.0 * standard_normal(rng));
    floor_and_normalize(lw, kDefaultWeightFloor);
    floor_and_normalize(shifted, kDefaultWeightFloor);
    EXPECT_LE((lw.array().exp() - shifted.array().exp()).abs().maxCoeff(), 1e-12);
  }
}

TEST(FloorAndNormalize, ProjectsOntoFlooredSimplex) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd lw(6);
    for (Eigen::Index m = 0; m < 6; ++m) lw[m] = 40.0 * standard_normal(rng);
    floor_and_normalize(lw, kDefaultWeightFloor);
    const Eigen::VectorXd w = lw.array().exp();
    EXPECT_NEAR(w.sum(), 1.0, 1e-10);
    EXPECT_GE(w.minCoeff(), kDefaultWeightFloor * (1.0 - 1e-10));
  }
}

TEST(FloorAndNormalize, UnderflowSafeInLogDomain) {
  Eigen::VectorXd lw(3);
  lw << -5000.0, -5001.0, -9000.0;
  floor_and_normalize(lw, 0.0);
  EXPECT_NEAR(std::exp(lw[0]) / std::exp(lw[1]), std::exp(1.0), 1e-9);
  EXPECT_NEAR(lw.array().exp().sum(), 1.0, 1e-12);
}

TEST(FloorAndNormalize, InactiveModelsStayInactive) {
  Eigen::VectorXd lw(3);
  lw << 0.0, -std::numeric_limits<double>::infinity(), -50.0;
  floor_and_normalize(lw, kDefaultWeightFloor);
  EXPECT_TRUE(std::isinf(lw[1]));
  EXPECT_NEAR(std::exp(lw[2]), kDefaultWeightFloor, 1e-12);
  EXPECT_NEAR(std::exp(lw[0]) + std::exp(lw[2]), 1.0, 1e-12);
}

TEST(InitEnsemble, SingleModelHasUnitWeight) {
  Rng rng(3);
  auto state = init_ensemble(KernelDictionary({rbf(0.2)}), wavy_data(12, 2, rng), 30, rng);
  EXPECT_EQ(state.weights()[0], 1.0);
  Rng draws(4);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(state.sample_model(draws), 0u);
}

TEST(InitEnsemble, IdenticalSpecsSplitWeightEvenly) {
  Rng rng(5);
  auto state = init_ensemble(KernelDictionary({rbf(0.2), rbf(0.2)}), wavy_data(15, 2, rng), 30, rng);
  EXPECT_NEAR(state.weights()[0], 0.5, 1e-6);
  EXPECT_NEAR(state.weights()[1], 0.5, 1e-6);
}

TEST(InitEnsemble, NeedsTwoPoints) {
  Rng rng(6);
  EXPECT_THROW((void)init_ensemble(KernelDictionary({rbf(0.2)}), wavy_data(1, 2, rng), 30, rng),
               ContractError);
}

TEST(InitEnsemble, GeneratingKernelGetsLargestWeight) {
  const std::vector<double> ells{0.03, 0.1, 0.3, 1.0};
  std::vector<KernelSpec> specs;
  for (double l : ells) specs.push_back(rbf(l, false));
  const KernelDictionary dict(specs);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd X = oracle::uniform_points(100, 1, rng);
    Eigen::MatrixXd C(100, 100);
    for (Eigen::Index i = 0; i < 100; ++i)
      for (Eigen::Index j = 0; j < 100; ++j)
        C(i, j) = oracle::sqexp(X.row(i).transpose(), X.row(j).transpose(), 0.1);
    C.diagonal().array() += 0.01;
    const Eigen::VectorXd y = oracle::gaussian_draw(C, rng);
    Dataset data(Box::unit(1));
    for (Eigen::Index i = 0; i < 100; ++i) data.append(X.row(i).transpose(), y[i]);
    const auto state = init_ensemble(dict, data, 50, rng);
    Eigen::Index best = 0;
    state.weights().maxCoeff(&best);
    hits += best == 1 ? 1 : 0;
  }
  EXPECT_GE(hits, 8);
}

TEST(EnsembleUpdate, EqualPredictiveDensitiesKeepWeights) {
  Rng rng(7);
  auto state = init_ensemble(KernelDictionary({rbf(0.3), rbf(0.3)}), wavy_data(10, 2, rng), 20, rng);
  state.set_log_weights(Eigen::Vector2d(std::log(0.3), std::log(0.7)));
  const auto batch = wavy_batch(5, 2, rng);
  state.update(batch);
  EXPECT_NEAR(state.weights()[0], 0.3, 1e-12);
  EXPECT_NEAR(state.weights()[1], 0.7, 1e-12);
}

TEST(EnsembleUpdate, IncrementIsPredictiveLogDensity) {
  Rng rng(8);
  auto state = init_ensemble(KernelDictionary({rbf(0.1, false), rbf(0.5, false)}),
                             wavy_data(10, 1, rng), 20, rng);
  EnsembleOptions opts = state.options();
  const Eigen::VectorXd before = state.log_weights();
  const Observation obs{Eigen::VectorXd::Constant(1, 0.37), 0.4};
  const double y = state.data().standardize(obs.y);
  Eigen::VectorXd expected = before;
  for (std::size_t m = 0; m < 2; ++m) {
    const Eigen::VectorXd phi = state.expert(m).map().features(obs.x);
    const double mean = phi.dot(state.expert(m).theta_mean());
    const double var = phi.dot(state.expert(m).theta_cov() * phi) + state.expert(m).spec().noise_var;
    expected[static_cast<Eigen::Index>(m)] +=
        -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (y - mean) * (y - mean) / var;
  }
  floor_and_normalize(expected, opts.weight_floor);
  state.update(std::span<const Observation>(&obs, 1));
  EXPECT_LE((state.log_weights() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EnsembleUpdate, PointwiseEqualsBatch) {
  Rng rng(9);
  const auto dict = KernelDictionary::parse("rbf,matern2.5");
  auto a = init_ensemble(dict, wavy_data(10, 2, rng), 20, rng);
  auto b = a;
  const auto batch = wavy_batch(8, 2, rng);
  a.update(batch);
  for (const auto& obs : batch) b.update(std::span<const Observation>(&obs, 1));
  expect_same_state(a, b);
}

TEST(EnsembleUpdate, WeightsStayNormalizedAndFloored) {
  Rng rng(10);
  auto state = init_ensemble(KernelDictionary::parse("rbf,rbf_ard,matern1.5,matern2.5"),
                             wavy_data(10, 2, rng), 30, rng);
  for (int i = 0; i < 40; ++i) {
    const auto batch = wavy_batch(1, 2, rng);
    state.update(batch);
    EXPECT_NEAR(weight_sum(state), 1.0, 1e-10);
    EXPECT_GE(state.weights().minCoeff(), kDefaultWeightFloor * (1.0 - 1e-10));
    for (const auto& e : state.experts()) EXPECT_EQ(e.n_obs(), state.data().size());
  }
}

TEST(EnsembleUpdate, EmptyBatchIsNoOp) {
  Rng rng(11);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5"), wavy_data(10, 2, rng), 20, rng);
  const auto copy = state;
  state.update({});
  expect_same_state(state, copy);
}

TEST(EnsembleUpdate, FailureLeavesStateUnchanged) {
  Rng rng(12);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5"), wavy_data(10, 2, rng), 20, rng);
  const auto copy = state;
  std::vector<Observation> batch = wavy_batch(3, 2, rng);
  batch.push_back({Eigen::Vector2d(1.5, 0.5), 0.0});
  EXPECT_THROW(state.update(batch), ContractError);
  expect_same_state(state, copy);
}

TEST(Reinitialize, DeterministicGivenSeed) {
  Rng rng(13);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern2.5"), wavy_data(12, 2, rng), 20, rng);
  state.update(wavy_batch(5, 2, rng));
  Rng a(77), b(77);
  const auto s1 = reinitialize(state, a);
  const auto s2 = reinitialize(state, b);
  expect_same_state(s1, s2);
  EXPECT_NEAR(weight_sum(s1), 1.0, 1e-10);
}

TEST(Reinitialize, EvidenceMatchesDenseOracle) {
  Rng rng(14);
  auto state = init_ensemble(KernelDictionary::parse("rbf,rbf_ard,matern1.5"), wavy_data(8, 2, rng),
                             15, rng);
  state.update(wavy_batch(10, 2, rng));
  state.reinitialize(rng);
  const auto& data = state.data();
  ASSERT_EQ(data.size(), 18u);
  for (const auto& e : state.experts()) {
    const double ref = oracle::rf_dense_evidence(e.map().feature_matrix(data.X()), data.y(),
                                                 e.spec().amplitude, e.spec().noise_var);
    EXPECT_NEAR(e.log_evidence(), ref, 1e-6);
  }
}

TEST(Reinitialize, FollowedByEmptyUpdateChangesNothing) {
  Rng rng(15);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5"), wavy_data(12, 2, rng), 20, rng);
  state.reinitialize(rng);
  const auto copy = state;
  state = update(state, {});
  expect_same_state(state, copy);
}

TEST(SampleModel, DegenerateWeightsAlwaysPickFirst) {
  Rng rng(16);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5,matern2.5"), wavy_data(10, 2, rng),
                             20, rng);
  const double ninf = -std::numeric_limits<double>::infinity();
  state.set_log_weights(Eigen::Vector3d(0.0, ninf, ninf));
  Rng draws(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_model(state, draws), 0u);
}

TEST(SampleModel, FrequenciesMatchWeights) {
  Rng rng(17);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5,matern2.5"), wavy_data(10, 2, rng),
                             20, rng);
  const Eigen::Vector3d w(0.5, 0.3, 0.2);
  state.set_log_weights(w.array().log());
  Rng draws(2);
  const int n = 100000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) counts[static_cast<Eigen::Index>(state.sample_model(draws))] += 1.0;
  for (Eigen::Index m = 0; m < 3; ++m) {
    EXPECT_LE(std::abs(counts[m] / n - w[m]), 3.0 * std::sqrt(w[m] * (1.0 - w[m]) / n));
  }
  Rng a(3), b(3);
  EXPECT_EQ(state.sample_model(a), state.sample_model(b));
}

TEST(MixturePredict, SingleModelReducesToExpert) {
  Rng rng(18);
  auto state = init_ensemble(KernelDictionary({rbf(0.2)}), wavy_data(10, 2, rng), 20, rng);
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, 0.8);
  const auto mix = mixture_predict(state, x);
  ASSERT_EQ(mix.size(), 1u);
  EXPECT_EQ(mix[0].weight, 1.0);
  EXPECT_EQ(mix[0].predictive.mean, state.expert(0).predict(x).mean);
  EXPECT_EQ(mix[0].predictive.var, state.expert(0).predict(x).var);
}

TEST(MixturePredict, MatchesBruteForceWeightedSum) {
  Rng rng(19);
  auto state = init_ensemble(KernelDictionary::parse("rbf,rbf_ard,matern1.5,matern2.5"),
                             wavy_data(15, 2, rng), 20, rng);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd x = oracle::uniform_points(1, 2, rng).row(0).transpose();
    const Eigen::VectorXd lw = state.log_weights();
    const double lse = lw.maxCoeff() + std::log((lw.array() - lw.maxCoeff()).exp().sum());
    double ref = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t m = 0; m < state.size(); ++m) {
      const double mean = state.expert(m).map().features(x).dot(state.expert(m).theta_mean());
      ref += std::exp(lw[static_cast<Eigen::Index>(m)] - lse) * mean;
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    const double got = state.mixture_mean(x);
    EXPECT_NEAR(got, ref, 1e-12);
    EXPECT_GE(got, lo - 1e-12);
    EXPECT_LE(got, hi + 1e-12);
  }
}

TEST(EnsembleSerialization, RoundTripPreservesState) {
  Rng rng(20);
  auto state = init_ensemble(KernelDictionary::parse("rbf,matern1.5"), wavy_data(10, 2, rng), 20, rng);
  state.update(wavy_batch(4, 2, rng));
  const auto back = EgpState::from_json(nlohmann::json::parse(state.to_json().dump()));
  ASSERT_EQ(back.size(), state.size());
  EXPECT_LE((back.log_weights() - state.log_weights()).cwiseAbs().maxCoeff(), 0.0);
  for (std::size_t m = 0; m < state.size(); ++m) {
    EXPECT_EQ(back.expert(m).theta_mean(), state.expert(m).theta_mean());
  }
  EXPECT_EQ(back.data().y_raw(), state.data().y_raw());
  EXPECT_EQ(back.data().shift(), state.data().shift());
}
