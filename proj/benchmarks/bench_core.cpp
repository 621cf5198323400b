#include <benchmark/benchmark.h>

#include "egpbo/acquisition.hpp"
#include "egpbo/gp_expert.hpp"
#include "egpbo/hyperfit.hpp"
#include "egpbo/objectives.hpp"
#include "egpbo/random.hpp"

using namespace egpbo;

namespace {

KernelSpec rbf(double ell) {
  KernelSpec s;
  s.lengthscales = Eigen::VectorXd::Constant(1, ell);
  return s;
}

Eigen::MatrixXd uniform(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = uniform01(rng);
  return X;
}

ExpertPosterior fitted_expert(Eigen::Index d, std::size_t D, Eigen::Index t) {
  Rng rng(1);
  const Eigen::MatrixXd X = uniform(t, d, rng);
  Eigen::VectorXd y(t);
  for (Eigen::Index i = 0; i < t; ++i) y[i] = std::sin(6.0 * X(i, 0)) + 0.1 * standard_normal(rng);
  return batch_fit(init_expert(rbf(0.2), D, d, 3), X, y);
}

}  // namespace

static void BM_Features(benchmark::State& state) {
  const auto D = static_cast<std::size_t>(state.range(0));
  const auto map = RandomFeatureMap::sample(rbf(0.3), D, 5, 7);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(map.features(x));
}
BENCHMARK(BM_Features)->Arg(50)->Arg(200)->Arg(1000);

static void BM_RecursiveUpdate(benchmark::State& state) {
  const auto D = static_cast<std::size_t>(state.range(0));
  ExpertPosterior e = fitted_expert(2, D, 30);
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, 0.7);
  for (auto _ : state) {
    ExpertPosterior copy = e;
    copy.update(x, 0.5);
    benchmark::DoNotOptimize(copy.theta_mean().data());
  }
}
BENCHMARK(BM_RecursiveUpdate)->Arg(50)->Arg(200);

static void BM_ProposeTs(benchmark::State& state) {
  const ExpertPosterior e = fitted_expert(2, 50, 40);
  const Box box = Box::unit(2);
  AscentOptions opt;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng theta(seed), restarts(seed + 1);
    ++seed;
    benchmark::DoNotOptimize(propose_ts_for(e, 0, box, theta, restarts, opt));
  }
}
BENCHMARK(BM_ProposeTs);

static void BM_HyperFit(benchmark::State& state) {
  const auto t = static_cast<Eigen::Index>(state.range(0));
  Rng data(2);
  const Eigen::MatrixXd X = uniform(t, 2, data);
  Eigen::VectorXd y(t);
  for (Eigen::Index i = 0; i < t; ++i) y[i] = std::cos(5.0 * X(i, 1)) + 0.05 * standard_normal(data);
  for (auto _ : state) {
    Rng rng(3);
    benchmark::DoNotOptimize(fit_hyperparameters(X, y, rbf(0.3), 50, rng));
  }
}
BENCHMARK(BM_HyperFit)->Arg(30)->Arg(110)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
