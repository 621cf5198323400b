#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "egpbo/kernel.hpp"
#include "egpbo/random.hpp"
#include "egpbo/rf_map.hpp"

namespace egpbo {

/// One-step-ahead predictive distribution of a noisy observation.
struct Predictive {
  double mean = 0.0;
  double var = 0.0;  // includes the noise variance
};

/// Gaussian posterior over the weights theta of the random-feature linear
/// model f(x) = phi(x)' theta, theta ~ N(0, sigma_theta^2 I) a priori, with
/// y = f(x) + N(0, sigma_n^2). Also carries the accumulated log evidence
/// sum_t log p(y_t | y_1..t-1), which equals log p(y_1..t) by the chain rule.
///
/// Single writer: update() mutates in place; readers may share a const
/// instance between updates.
class ExpertPosterior {
 public:
  /// Prior state for `spec` with the given feature map.
  ExpertPosterior(KernelSpec spec, RandomFeatureMap map);

  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const RandomFeatureMap& map() const noexcept { return map_; }
  [[nodiscard]] const Eigen::VectorXd& theta_mean() const noexcept { return theta_mean_; }
  [[nodiscard]] const Eigen::MatrixXd& theta_cov() const noexcept { return theta_cov_; }
  [[nodiscard]] double log_evidence() const noexcept { return log_evidence_; }
  [[nodiscard]] std::size_t n_obs() const noexcept { return n_obs_; }

  [[nodiscard]] Predictive predict(const Eigen::VectorXd& x) const;

  /// Rank-one recursive Bayes step:
  ///   s = Sigma phi, sigma2 = phi' s + sigma_n^2,
  ///   theta += s (y - phi' theta) / sigma2,  Sigma -= s s' / sigma2.
  /// Throws NumericalError (leaving *this untouched) if sigma2 is not positive.
  void update(const Eigen::VectorXd& x, double y);

  /// Replaces the state with the batch posterior from the prior given (X, y).
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

  /// Restores a serialized state; used by from_json.
  void set_state(Eigen::VectorXd mean, Eigen::MatrixXd cov, double log_evidence, std::size_t n_obs);

 private:
  KernelSpec spec_;
  RandomFeatureMap map_;
  Eigen::VectorXd theta_mean_;
  Eigen::MatrixXd theta_cov_;
  double log_evidence_ = 0.0;
  std::size_t n_obs_ = 0;
};

/// Prior expert with a freshly drawn map of D features.
ExpertPosterior init_expert(const KernelSpec& spec, std::size_t num_features, Eigen::Index dim,
                            std::uint64_t seed);

/// Batch posterior from the expert's prior given all of (X, y):
///   Sigma = (Phi'Phi / sigma_n^2 + I / sigma_theta^2)^-1,  theta = Sigma Phi' y / sigma_n^2,
///   log_evidence = log N(y; 0, sigma_theta^2 Phi Phi' + sigma_n^2 I).
/// Throws NumericalError when the precision matrix has condition number
/// above 1e12.
ExpertPosterior batch_fit(const ExpertPosterior& expert, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y);

Predictive predictive(const ExpertPosterior& expert, const Eigen::VectorXd& x);

ExpertPosterior recursive_update(ExpertPosterior expert, const Eigen::VectorXd& x, double y);

/// theta_mean + L z with L L' = Sigma + jitter I, z ~ N(0, I). Jitter starts
/// at 1e-9 * trace(Sigma) / 2D and grows x10 up to 1e-3 * trace(Sigma) / 2D.
Eigen::VectorXd sample_theta(const ExpertPosterior& expert, Rng& rng);

double log_evidence(const ExpertPosterior& expert);

/// log N(y; 0, sigma_theta^2 Phi Phi' + sigma_n^2 I) for a given map and
/// spec, computed in whichever of the t x t or 2D x 2D forms is smaller.
/// Returns -inf when the covariance cannot be factorized.
double rf_log_evidence(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double amplitude,
                       double noise_var);

/// Lower Cholesky factor of `cov` with escalating diagonal jitter.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov);

nlohmann::json expert_to_json(const ExpertPosterior& expert);
ExpertPosterior expert_from_json(const nlohmann::json& j);

}  // namespace egpbo
