#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "egpbo/dataset.hpp"
#include "egpbo/gp_expert.hpp"
#include "egpbo/hyperfit.hpp"
#include "egpbo/kernel.hpp"
#include "egpbo/random.hpp"

namespace egpbo {

inline constexpr double kDefaultWeightFloor = 1e-4;

struct EnsembleOptions {
  std::size_t num_features = 50;
  double weight_floor = kDefaultWeightFloor;  // 0 disables flooring
  bool fit_hyperparameters = true;
  HyperFitOptions fit;
};

struct WeightedPredictive {
  double weight = 0.0;
  Predictive predictive;
};

/// Projects normalized weights onto {w : w_m >= floor, sum w = 1} by pinning
/// the entries that fall below the floor and rescaling the rest. Operates
/// on log weights; entries that are -inf stay inactive and are ignored.
void floor_and_normalize(Eigen::VectorXd& log_weights, double floor);

/// Mixture of M random-feature GP experts with posterior model weights
/// w_m proportional to w_0 p(D | m), maintained in the log domain.
///
/// update() applies, per observation, the predictive-likelihood weight
/// recursion and the rank-one expert updates; reinitialize() refits every
/// expert on all data and recomputes the weights from the evidence.
/// Mutators give the strong exception guarantee.
class EgpState {
 public:
  /// Fits each dictionary entry on `data0` (t0 >= 2), draws its feature map
  /// and computes the batch posterior and evidence-based weights.
  static EgpState initialize(const KernelDictionary& dict, Dataset data0,
                             const EnsembleOptions& options, Rng& rng);

  /// No-op on an empty batch.
  void update(std::span<const Observation> batch);
  void reinitialize(Rng& rng);
  /// Appends the batch to the data and refits from scratch.
  void append_and_reinitialize(std::span<const Observation> batch, Rng& rng);

  [[nodiscard]] std::size_t sample_model(Rng& rng) const;
  [[nodiscard]] std::vector<WeightedPredictive> mixture_predict(const Eigen::VectorXd& x) const;
  [[nodiscard]] double mixture_mean(const Eigen::VectorXd& x) const;

  [[nodiscard]] std::size_t size() const noexcept { return experts_.size(); }
  [[nodiscard]] const std::vector<ExpertPosterior>& experts() const noexcept { return experts_; }
  [[nodiscard]] const ExpertPosterior& expert(std::size_t m) const { return experts_.at(m); }
  [[nodiscard]] const Eigen::VectorXd& log_weights() const noexcept { return log_weights_; }
  [[nodiscard]] Eigen::VectorXd weights() const;
  [[nodiscard]] const Dataset& data() const noexcept { return data_; }
  [[nodiscard]] const EnsembleOptions& options() const noexcept { return options_; }
  [[nodiscard]] const KernelDictionary& dictionary() const noexcept { return dict_; }
  /// Number of experts whose last hyperparameter fit raised a warning.
  [[nodiscard]] std::size_t fit_warnings() const noexcept { return fit_warnings_; }

  [[nodiscard]] nlohmann::json to_json() const;
  static EgpState from_json(const nlohmann::json& j);

  /// Test hook: overrides the log weights (normalized, floor not applied).
  void set_log_weights(Eigen::VectorXd log_weights);

 private:
  EgpState() = default;
  void refit(Rng& rng);

  KernelDictionary dict_;
  EnsembleOptions options_;
  std::vector<ExpertPosterior> experts_;
  Eigen::VectorXd log_weights_;
  Dataset data_;
  std::size_t fit_warnings_ = 0;
};

EgpState init_ensemble(const KernelDictionary& dict, Dataset data0, std::size_t num_features,
                       Rng& rng);
EgpState update(EgpState state, std::span<const Observation> batch);
EgpState reinitialize(EgpState state, Rng& rng);
std::size_t sample_model(const EgpState& state, Rng& rng);
std::vector<WeightedPredictive> mixture_predict(const EgpState& state, const Eigen::VectorXd& x);

/// Draws an index from normalized (linear-domain) probabilities using one
/// uniform variate.
std::size_t sample_categorical(const Eigen::VectorXd& probabilities, Rng& rng);

double gaussian_log_density(double y, double mean, double var);

}  // namespace egpbo
