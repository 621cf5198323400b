#include <cmath>

#include <gtest/gtest.h>

#include "egpbo/errors.hpp"
#include "egpbo/objectives.hpp"

using namespace egpbo;

TEST(Objectives, TabulatedOptima) {
  EXPECT_NEAR(dropwave(Eigen::Vector2d(0.0, 0.0)), 1.0, 1e-15);
  EXPECT_NEAR(zakharov(Eigen::VectorXd::Zero(4)), 0.0, 1e-15);
  EXPECT_NEAR(eggholder(Eigen::Vector2d(512.0, 404.2319)), 959.6407, 1e-3);
  const Eigen::VectorXd a = (Eigen::VectorXd(5) << 0.6231, 0.6231, 1.0, 0.6231, 0.6231).finished();
  EXPECT_NEAR(ackley5d(a), 4.6930, 1e-3);
}

TEST(Objectives, SignConventionsAreMaximization) {
  // each standard form is minimized at its optimum, so the negated forms are
  // below the optimum elsewhere
  EXPECT_LT(zakharov(Eigen::Vector4d(1.0, -1.0, 2.0, 0.5)), 0.0);
  EXPECT_LT(dropwave(Eigen::Vector2d(1.0, 2.0)), 1.0);
  EXPECT_GT(dropwave(Eigen::Vector2d(1.0, 2.0)), 0.0);
  EXPECT_LT(eggholder(Eigen::Vector2d(0.0, 0.0)), 959.6407);
  EXPECT_LT(ackley5d(Eigen::VectorXd::Zero(5)), 1e-12);
}

TEST(MakeObjective, SpecsCarryTableData) {
  for (const auto& name : objective_names()) {
    const SyntheticObjective obj = make_objective(name);
    const ObjectiveSpec& s = obj.spec();
    EXPECT_EQ(s.name, name);
    EXPECT_TRUE(s.box.contains(s.x_star));
    EXPECT_LE(std::abs(obj(s.x_star) - s.f_star), 1e-3);
    EXPECT_GT(s.noise_sd, 0.0);
  }
  EXPECT_EQ(make_objective("ackley5d").spec().box.dim(), 5);
  EXPECT_EQ(make_objective("zakharov").spec().box.dim(), 4);
  EXPECT_EQ(make_objective("eggholder").spec().box.hi[0], 512.0);
}

TEST(MakeObjective, UnknownNameListsChoices) {
  try {
    (void)make_objective("rosenbrock");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("dropwave"), std::string::npos);
  }
}

TEST(NoisyEval, ZeroNoiseIsExact) {
  SyntheticObjective obj = make_objective("dropwave");
  obj.set_noise_sd(0.0);
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, -1.2);
  EXPECT_EQ(noisy_eval(obj, x, 5, 17), dropwave(x));
}

TEST(NoisyEval, SampleMeanConverges) {
  const SyntheticObjective obj = make_objective("dropwave");
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, -1.2);
  double sum = 0.0;
  for (std::size_t i = 0; i < 10000; ++i) sum += noisy_eval(obj, x, 3, i);
  EXPECT_LE(std::abs(sum / 10000.0 - dropwave(x)), 3.0 * obj.spec().noise_sd / 100.0);
}

TEST(NoisyEval, DeterministicPerSeedAndIndex) {
  const SyntheticObjective obj = make_objective("eggholder");
  const Eigen::VectorXd x = Eigen::Vector2d(10.0, -20.0);
  EXPECT_EQ(noisy_eval(obj, x, 1, 4), noisy_eval(obj, x, 1, 4));
  EXPECT_NE(noisy_eval(obj, x, 1, 4), noisy_eval(obj, x, 2, 4));
  EXPECT_NE(noisy_eval(obj, x, 1, 4), noisy_eval(obj, x, 1, 5));
}

TEST(NoisyEval, OutsideBoxIsContractViolation) {
  const SyntheticObjective obj = make_objective("dropwave");
  EXPECT_THROW((void)noisy_eval(obj, Eigen::Vector2d(6.0, 0.0), 1, 0), ContractError);
}

TEST(DefaultNoise, OnePercentOfProbedRange) {
  const Box box = Box::cube(1, 0.0, 2.0);
  const double sd = default_noise_sd([](const Eigen::VectorXd& x) { return 3.0 * x[0]; }, box);
  EXPECT_NEAR(sd, 0.06, 1e-3);
  EXPECT_LE(sd, 0.06);
}

TEST(SimpleRegret, Definitions) {
  SyntheticObjective obj = make_objective("dropwave");
  RunRecord rec;
  RunRow row;
  row.x = Eigen::Vector2d(3.0, 3.0);
  rec.rows.push_back(row);
  const double f1 = dropwave(row.x);
  EXPECT_NEAR(simple_regret(rec, obj)[0], 1.0 - f1, 1e-15);
  row.x = Eigen::Vector2d(0.0, 0.0);
  rec.rows.push_back(row);
  row.x = Eigen::Vector2d(1.0, 1.0);
  rec.rows.push_back(row);
  const auto sr = simple_regret(rec, obj);
  EXPECT_EQ(sr[1], 0.0);
  EXPECT_EQ(sr[2], 0.0);
}

TEST(SimpleRegret, NonNegativeWhenOptimumIsTrueMax) {
  const SyntheticObjective obj = make_objective("dropwave");
  Rng rng(1);
  RunRecord rec;
  for (int i = 0; i < 500; ++i) {
    RunRow row;
    row.x = Eigen::Vector2d(-5.12 + 10.24 * uniform01(rng), -5.12 + 10.24 * uniform01(rng));
    rec.rows.push_back(row);
  }
  const auto sr = simple_regret(rec, obj);
  for (std::size_t i = 0; i < sr.size(); ++i) {
    EXPECT_GE(sr[i], 0.0);
    if (i > 0) EXPECT_LE(sr[i], sr[i - 1]);
  }
}
