#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "egpbo/dataset.hpp"
#include "egpbo/ensemble.hpp"
#include "egpbo/gp_expert.hpp"
#include "egpbo/random.hpp"
#include "egpbo/rf_map.hpp"

namespace egpbo {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using GradientField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct AscentOptions {
  int restarts = 10;
  int iters = 200;
  double initial_step = 0.1;  // fraction of the box width
  double grad_tol = 1e-8;
};

struct AscentResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd best_start;
  double best_start_value = 0.0;
  bool warning = false;  // no start had a finite objective
};

/// Multi-start projected gradient ascent. Each restart begins at a uniform
/// point of the box, moves along the projected gradient (scaled by the box
/// width), halves its step whenever a move fails to improve and grows it
/// back toward the initial step on success. The best terminal point over
/// all restarts is returned; it is never worse than the best start.
AscentResult maximize_in_box(const ScalarField& f, const GradientField& grad, const Box& box,
                             Rng& rng, const AscentOptions& options);

/// Central differences, falling back to one-sided at the box faces.
Eigen::VectorXd finite_difference_gradient(const ScalarField& f, const Eigen::VectorXd& x,
                                           const Box& box, double rel_step = 1e-6);

/// One posterior function draw f(x) = phi(x)' theta.
class SampledFunction {
 public:
  SampledFunction(const RandomFeatureMap& map, Eigen::VectorXd theta);

  [[nodiscard]] double value(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  [[nodiscard]] const Eigen::VectorXd& theta() const noexcept { return theta_; }

 private:
  const RandomFeatureMap* map_;
  Eigen::VectorXd theta_;
};

struct Proposal {
  Eigen::VectorXd x;
  std::size_t model = 0;
  double acquisition_value = 0.0;
  bool warning = false;
  bool fallback = false;  // EI was flat and the posterior mean was maximized instead
};

/// Caller-owned generators for the pieces of one proposal.
struct ProposalStreams {
  Rng& model;
  Rng& theta;
  Rng& restarts;
};

/// Thompson step for a fixed expert: draws theta ~ N(theta_mean, Sigma) and
/// maximizes phi(x)' theta over the box.
Proposal propose_ts_for(const ExpertPosterior& expert, std::size_t model, const Box& box,
                        Rng& theta_rng, Rng& restart_rng, const AscentOptions& options);

/// Samples the model index from the ensemble weights, then proposes with
/// propose_ts_for.
Proposal propose_ts(const EgpState& state, const Box& box, ProposalStreams streams,
                    const AscentOptions& options);

/// EI(mu, s; y+) = (mu - y+) Phi(z) + s phi(z), z = (mu - y+) / s.
double expected_improvement(double mean, double sd, double incumbent);

/// Maximizes EI of one expert's noise-free predictive (finite-difference
/// gradients). Falls back to maximizing the posterior mean when EI is zero
/// across every restart.
Proposal propose_ei_for(const ExpertPosterior& expert, std::size_t model, double incumbent,
                        const Box& box, Rng& restart_rng, const AscentOptions& options);

Proposal propose_ei(const EgpState& state, double incumbent, const Box& box,
                    ProposalStreams streams, const AscentOptions& options);

}  // namespace egpbo
