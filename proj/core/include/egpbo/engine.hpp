#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "egpbo/acquisition.hpp"
#include "egpbo/dataset.hpp"
#include "egpbo/ensemble.hpp"
#include "egpbo/hyperfit.hpp"
#include "egpbo/kernel.hpp"
#include "egpbo/random.hpp"
#include "egpbo/run_record.hpp"

namespace egpbo {

enum class RunMode { Sequential, SyncParallel, AsyncParallel };
enum class AcquisitionKind { ThompsonSampling, ExpectedImprovement };
/// Ensemble runs EGP over the whole dictionary; SingleGp runs plain GP
/// Thompson sampling with a one-entry dictionary and no model weights.
enum class SurrogateKind { Ensemble, SingleGp };

/// Simulated evaluation time of one job.
struct DurationModel {
  enum class Kind { Constant, LogNormal };
  Kind kind = Kind::Constant;
  double mean = 1.0;   // Constant: the duration; LogNormal: exp(mu)
  double sigma = 0.5;  // LogNormal shape

  [[nodiscard]] double sample(Rng& rng) const;
};

struct BOConfig {
  std::size_t budget = 150;  // total evaluations T, including the t0 random ones
  std::size_t t0 = 10;
  std::size_t workers = 1;
  RunMode mode = RunMode::Sequential;
  std::size_t rf_dim = 50;
  std::size_t refit_interval = 50;
  AcquisitionKind acquisition = AcquisitionKind::ThompsonSampling;
  SurrogateKind surrogate = SurrogateKind::Ensemble;
  int restarts = 10;
  int ascent_iters = 200;
  std::uint64_t seed = 0;
  double weight_floor = kDefaultWeightFloor;
  DurationModel durations;
  bool concurrent_eval = false;  // sync mode: evaluate a round's proposals on K threads
  HyperFitOptions fit;
  std::filesystem::path checkpoint_dir;  // empty: no snapshots
  std::size_t run_id = 0;

  void validate() const;
};

/// Black-box maximization problem in native coordinates. `evaluate` gets
/// the evaluation index so noisy objectives stay deterministic under
/// concurrent calls; it must be safe to call concurrently when
/// BOConfig::concurrent_eval is set.
struct Problem {
  Box box;
  std::function<double(const Eigen::VectorXd& x, std::size_t eval_index)> evaluate;
  std::function<double(const Eigen::VectorXd& x)> noiseless;  // optional, for regret
  std::optional<double> f_star;
};

/// Raised when the objective throws mid-run; carries the rows recorded so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunRecord partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const RunRecord& partial() const noexcept { return partial_; }

 private:
  RunRecord partial_;
};

/// t0 uniform evaluations, model initialization, then propose/evaluate/update
/// until the budget is spent; refits every refit_interval observations.
RunRecord run_sequential(const Problem& problem, const KernelDictionary& dict,
                         const BOConfig& config);

/// Rounds of `workers` proposals from the same posterior, each with its own
/// model and theta draw, followed by one batched update.
RunRecord run_sync(const Problem& problem, const KernelDictionary& dict, const BOConfig& config);

/// Event-driven simulation: each completion (earliest finish time, ties by
/// worker id) triggers an update (or refit) and a fresh proposal for the
/// freed worker.
RunRecord run_async(const Problem& problem, const KernelDictionary& dict, const BOConfig& config);

/// Dispatches on config.mode.
RunRecord run_bo(const Problem& problem, const KernelDictionary& dict, const BOConfig& config);

/// Uniform random search with the same initial points and trace format.
RunRecord baseline_random(const Problem& problem, const BOConfig& config);

}  // namespace egpbo
