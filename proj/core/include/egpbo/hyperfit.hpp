#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "egpbo/kernel.hpp"
#include "egpbo/random.hpp"

namespace egpbo {

/// Box bounds (log10 units) and ascent settings for evidence maximization.
struct HyperFitOptions {
  int restarts = 3;  // random starts in addition to the initial spec
  int max_iters = 200;
  double fd_step = 1e-4;
  double initial_step = 0.5;
  double min_step = 1e-4;
  double ftol = 1e-5;  // stop after 3 accepted steps each gaining less than ftol * (1 + |f|)
  double log10_lengthscale_lo = -4.0;
  double log10_lengthscale_hi = 6.0;
  double log10_amplitude_lo = -3.0;
  double log10_amplitude_hi = 3.0;
  double log10_noise_lo = -6.0;
  double log10_noise_hi = 0.0;
  // random starts are drawn from this narrower region (inputs live in the unit box)
  double start_log10_lengthscale_lo = -2.0;
  double start_log10_lengthscale_hi = 1.0;
  double start_log10_amplitude_lo = -1.0;
  double start_log10_amplitude_hi = 1.0;
  double start_log10_noise_lo = -4.0;
  double start_log10_noise_hi = 0.0;
};

struct HyperFitResult {
  KernelSpec spec;
  double log_evidence = 0.0;          // objective at `spec`
  double initial_log_evidence = 0.0;  // objective at the (clamped) initial spec
  bool warning = false;               // no start produced a finite objective
  int evaluations = 0;
};

/// Maximizes the random-feature log evidence of (X, y) over log10 of the
/// lengthscales (unless pinned by spec.learn_lengthscales), amplitude and
/// noise variance. The kernel family never changes.
///
/// The spectral draw is fixed for the whole search (one base sample scaled
/// by the candidate lengthscales), which makes the objective a smooth
/// function of the parameters. Gradients are central finite differences.
/// Each start follows BFGS-preconditioned ascent directions projected onto
/// the bounds, halving the step until the objective improves.
HyperFitResult fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const KernelSpec& spec, std::size_t num_features, Rng& rng,
                                   const HyperFitOptions& options = {});

}  // namespace egpbo
