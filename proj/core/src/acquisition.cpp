#include "egpbo/acquisition.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "egpbo/errors.hpp"

namespace egpbo {

namespace {

Eigen::VectorXd uniform_in_box(const Box& box, Rng& rng) {
  Eigen::VectorXd u(box.dim());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = uniform01(rng);
  return box.from_unit(u);
}

}  // namespace

AscentResult maximize_in_box(const ScalarField& f, const GradientField& grad, const Box& box,
                             Rng& rng, const AscentOptions& options) {
  if (options.restarts < 1) throw ContractError("maximize_in_box needs at least one restart");
  const Eigen::VectorXd width = box.width();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  AscentResult result;
  result.value = kNegInf;
  result.best_start_value = kNegInf;
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd x = uniform_in_box(box, rng);
    double fx = f(x);
    if (r == 0 || fx > result.best_start_value) {
      result.best_start = x;
      result.best_start_value = fx;
    }
    if (!std::isfinite(fx)) continue;

    double step = options.initial_step;
    Eigen::VectorXd g = grad(x);
    for (int it = 0; it < options.iters; ++it) {
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) g[i] = 0.0;
        if ((x[i] <= box.lo[i] && g[i] < 0.0) || (x[i] >= box.hi[i] && g[i] > 0.0)) g[i] = 0.0;
      }
      const Eigen::VectorXd scaled = g.cwiseProduct(width);
      const double gnorm = scaled.norm();
      if (gnorm < options.grad_tol * (1.0 + std::abs(fx))) break;
      const Eigen::VectorXd cand = box.clamp(x + (step / gnorm) * scaled.cwiseProduct(width));
      const double fc = f(cand);
      if (fc > fx) {
        x = cand;
        fx = fc;
        step = std::min(2.0 * step, options.initial_step);
        g = grad(x);
      } else {
        step *= 0.5;
        if (step < 1e-12) break;
      }
    }
    if (fx > result.value) {
      result.x = x;
      result.value = fx;
    }
  }
  if (!std::isfinite(result.value)) {
    result.warning = true;
    result.x = result.best_start;
    result.value = result.best_start_value;
  }
  return result;
}

Eigen::VectorXd finite_difference_gradient(const ScalarField& f, const Eigen::VectorXd& x,
                                           const Box& box, double rel_step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (box.hi[i] - box.lo[i]);
    Eigen::VectorXd up = x, down = x;
    up[i] = std::min(x[i] + h, box.hi[i]);
    down[i] = std::max(x[i] - h, box.lo[i]);
    g[i] = (f(up) - f(down)) / (up[i] - down[i]);
  }
  return g;
}

SampledFunction::SampledFunction(const RandomFeatureMap& map, Eigen::VectorXd theta)
    : map_(&map), theta_(std::move(theta)) {
  if (theta_.size() != map.feature_dim()) throw ContractError("theta length must be 2D");
}

double SampledFunction::value(const Eigen::VectorXd& x) const {
  return map_->features(x).dot(theta_);
}

Eigen::VectorXd SampledFunction::gradient(const Eigen::VectorXd& x) const {
  // J' theta without forming the Jacobian
  const Eigen::MatrixXd& V = map_->spectral();
  const Eigen::VectorXd proj = V * x;
  const double scale = 1.0 / std::sqrt(static_cast<double>(map_->num_features()));
  Eigen::VectorXd coeff(V.rows());
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    coeff[j] = (theta_[2 * j] * std::cos(proj[j]) - theta_[2 * j + 1] * std::sin(proj[j])) * scale;
  }
  return V.transpose() * coeff;
}

Proposal propose_ts_for(const ExpertPosterior& expert, std::size_t model, const Box& box,
                        Rng& theta_rng, Rng& restart_rng, const AscentOptions& options) {
  const SampledFunction sample(expert.map(), sample_theta(expert, theta_rng));
  const AscentResult best = maximize_in_box(
      [&](const Eigen::VectorXd& x) { return sample.value(x); },
      [&](const Eigen::VectorXd& x) { return sample.gradient(x); }, box, restart_rng, options);
  return {best.x, model, best.value, best.warning, false};
}

Proposal propose_ts(const EgpState& state, const Box& box, ProposalStreams streams,
                    const AscentOptions& options) {
  const std::size_t m = state.sample_model(streams.model);
  return propose_ts_for(state.expert(m), m, box, streams.theta, streams.restarts, options);
}

double expected_improvement(double mean, double sd, double incumbent) {
  const double gap = mean - incumbent;
  if (!(sd > 1e-12)) return std::max(gap, 0.0);
  const double z = gap / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(gap * cdf + sd * pdf, 0.0);
}

Proposal propose_ei_for(const ExpertPosterior& expert, std::size_t model, double incumbent,
                        const Box& box, Rng& restart_rng, const AscentOptions& options) {
  const double noise = expert.spec().noise_var;
  const ScalarField ei = [&](const Eigen::VectorXd& x) {
    const Predictive p = expert.predict(x);
    return expected_improvement(p.mean, std::sqrt(std::max(p.var - noise, 0.0)), incumbent);
  };
  const GradientField ei_grad = [&](const Eigen::VectorXd& x) {
    return finite_difference_gradient(ei, x, box);
  };
  // restart stream is copied so the fallback reuses the same starts
  Rng fallback_rng = restart_rng;
  const AscentResult best = maximize_in_box(ei, ei_grad, box, restart_rng, options);
  if (best.value > 0.0) return {best.x, model, best.value, best.warning, false};

  const SampledFunction mean_fn(expert.map(), expert.theta_mean());
  const AscentResult by_mean = maximize_in_box(
      [&](const Eigen::VectorXd& x) { return mean_fn.value(x); },
      [&](const Eigen::VectorXd& x) { return mean_fn.gradient(x); }, box, fallback_rng, options);
  return {by_mean.x, model, 0.0, by_mean.warning, true};
}

Proposal propose_ei(const EgpState& state, double incumbent, const Box& box,
                    ProposalStreams streams, const AscentOptions& options) {
  const std::size_t m = state.sample_model(streams.model);
  return propose_ei_for(state.expert(m), m, incumbent, box, streams.restarts, options);
}

}  // namespace egpbo
