#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "egpbo/dataset.hpp"
#include "egpbo/engine.hpp"
#include "egpbo/run_record.hpp"

namespace egpbo {

/// Synthetic benchmark functions, all posed as maximization problems.
double ackley5d(const Eigen::VectorXd& x);  // plain Ackley, maximized on [0,1]^5
double zakharov(const Eigen::VectorXd& x);  // negated
double dropwave(const Eigen::VectorXd& x);  // negated
double eggholder(const Eigen::VectorXd& x); // negated

struct ObjectiveSpec {
  std::string name;
  Box box;
  double f_star = 0.0;
  Eigen::VectorXd x_star;
  double noise_sd = 0.0;
};

class SyntheticObjective {
 public:
  SyntheticObjective(ObjectiveSpec spec, std::function<double(const Eigen::VectorXd&)> f);

  [[nodiscard]] const ObjectiveSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] double operator()(const Eigen::VectorXd& x) const;

  /// f(x) + noise_sd * z with z drawn from a generator keyed on
  /// (seed, call_index); throws ContractError outside the box.
  [[nodiscard]] double noisy(const Eigen::VectorXd& x, std::uint64_t seed,
                             std::size_t call_index) const;

  void set_noise_sd(double sd);

 private:
  ObjectiveSpec spec_;
  std::function<double(const Eigen::VectorXd&)> f_;
};

std::vector<std::string> objective_names();

/// Builds a named objective with the default noise level and checks its
/// tabulated optimum (|f(x*) - f*| <= 1e-3). Unknown names raise UsageError.
SyntheticObjective make_objective(std::string_view name);

/// 0.01 * (max - min) of f over `probes` uniform points of the box.
double default_noise_sd(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                        std::size_t probes = 1000, std::uint64_t seed = 0);

double noisy_eval(const SyntheticObjective& objective, const Eigen::VectorXd& x,
                  std::uint64_t seed, std::size_t call_index);

/// Wraps the objective for the optimization loops with noise keyed on `seed`.
Problem make_problem(const SyntheticObjective& objective, std::uint64_t seed);

/// SR(t) = f* - max_{tau <= t} f(x_tau) from noiseless re-evaluation.
std::vector<double> simple_regret(const RunRecord& record, const SyntheticObjective& objective);

}  // namespace egpbo
