#include "egpbo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "egpbo/errors.hpp"
#include "egpbo/random.hpp"

namespace egpbo {

double ackley5d(const Eigen::VectorXd& x) {
  const auto n = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / n;
  const double cs = (2.0 * std::numbers::pi * x.array()).cos().sum() / n;
  return -20.0 * std::exp(-0.2 * std::sqrt(sq)) - std::exp(cs) + 20.0 + std::numbers::e;
}

double zakharov(const Eigen::VectorXd& x) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s1 += x[i] * x[i];
    s2 += 0.5 * static_cast<double>(i + 1) * x[i];
  }
  return -s1 - s2 * s2 - s2 * s2 * s2 * s2;
}

double dropwave(const Eigen::VectorXd& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return (1.0 + std::cos(12.0 * std::sqrt(r2))) / (0.5 * r2 + 2.0);
}

double eggholder(const Eigen::VectorXd& x) {
  const double x1 = x[0];
  const double x2 = x[1];
  return (x2 + 47.0) * std::sin(std::sqrt(std::abs(x2 + x1 / 2.0 + 47.0))) +
         x1 * std::sin(std::sqrt(std::abs(x1 - x2 - 47.0)));
}

SyntheticObjective::SyntheticObjective(ObjectiveSpec spec,
                                       std::function<double(const Eigen::VectorXd&)> f)
    : spec_(std::move(spec)), f_(std::move(f)) {
  if (!spec_.box.contains(spec_.x_star)) throw ContractError(spec_.name + ": maximizer outside box");
}

double SyntheticObjective::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != spec_.box.dim()) throw ContractError(spec_.name + ": dimension mismatch");
  return f_(x);
}

double SyntheticObjective::noisy(const Eigen::VectorXd& x, std::uint64_t seed,
                                 std::size_t call_index) const {
  if (!spec_.box.contains(x)) throw ContractError(spec_.name + ": point outside the box");
  const double fx = f_(x);
  if (spec_.noise_sd == 0.0) return fx;
  Rng rng(derive_seed(seed, Stream::Noise, call_index));
  return fx + spec_.noise_sd * standard_normal(rng);
}

void SyntheticObjective::set_noise_sd(double sd) {
  if (!(sd >= 0.0)) throw UsageError("noise sd must be non-negative");
  spec_.noise_sd = sd;
}

std::vector<std::string> objective_names() { return {"ackley5d", "zakharov", "dropwave", "eggholder"}; }

double default_noise_sd(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                        std::size_t probes, std::uint64_t seed) {
  Rng rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  Eigen::VectorXd u(box.dim());
  for (std::size_t i = 0; i < probes; ++i) {
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = uniform01(rng);
    const double v = f(box.from_unit(u));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return 0.01 * (hi - lo);
}

SyntheticObjective make_objective(std::string_view name) {
  ObjectiveSpec spec;
  spec.name = std::string(name);
  std::function<double(const Eigen::VectorXd&)> f;
  if (name == "ackley5d") {
    spec.box = Box::cube(5, 0.0, 1.0);
    spec.x_star = (Eigen::VectorXd(5) << 0.6231, 0.6231, 1.0, 0.6231, 0.6231).finished();
    spec.f_star = 4.6930;
    f = ackley5d;
  } else if (name == "zakharov") {
    spec.box = Box::cube(4, -5.0, 10.0);
    spec.x_star = Eigen::VectorXd::Zero(4);
    spec.f_star = 0.0;
    f = zakharov;
  } else if (name == "dropwave") {
    spec.box = Box::cube(2, -5.12, 5.12);
    spec.x_star = Eigen::VectorXd::Zero(2);
    spec.f_star = 1.0;
    f = dropwave;
  } else if (name == "eggholder") {
    spec.box = Box::cube(2, -512.0, 512.0);
    spec.x_star = (Eigen::VectorXd(2) << 512.0, 404.2319).finished();
    spec.f_star = 959.6407;
    f = eggholder;
  } else {
    std::string choices;
    for (const auto& n : objective_names()) choices += (choices.empty() ? "" : ", ") + n;
    throw UsageError("unknown function '" + std::string(name) + "' (choices: " + choices + ")");
  }
  if (std::abs(f(spec.x_star) - spec.f_star) > 1e-3) {
    throw ContractError(spec.name + ": tabulated optimum does not match the formula");
  }
  spec.noise_sd = default_noise_sd(f, spec.box);
  return SyntheticObjective(std::move(spec), std::move(f));
}

double noisy_eval(const SyntheticObjective& objective, const Eigen::VectorXd& x,
                  std::uint64_t seed, std::size_t call_index) {
  return objective.noisy(x, seed, call_index);
}

Problem make_problem(const SyntheticObjective& objective, std::uint64_t seed) {
  Problem p;
  p.box = objective.spec().box;
  p.evaluate = [objective, seed](const Eigen::VectorXd& x, std::size_t index) {
    return objective.noisy(x, seed, index);
  };
  p.noiseless = [objective](const Eigen::VectorXd& x) { return objective(x); };
  p.f_star = objective.spec().f_star;
  return p;
}

std::vector<double> simple_regret(const RunRecord& record, const SyntheticObjective& objective) {
  std::vector<double> out;
  out.reserve(record.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& row : record.rows) {
    best = std::max(best, objective(row.x));
    out.push_back(objective.spec().f_star - best);
  }
  return out;
}

}  // namespace egpbo
