#include "egpbo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

double DurationModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant:
      return mean;
    case Kind::LogNormal: {
      const double z = standard_normal(rng);
      return mean * std::exp(sigma * z);
    }
  }
  return mean;
}

void BOConfig::validate() const {
  if (t0 < 2) throw UsageError("need at least 2 initial points");
  if (budget < t0) throw UsageError("budget must be at least the number of initial points");
  if (workers < 1) throw UsageError("need at least one worker");
  if (rf_dim < 1) throw UsageError("need at least one random feature");
  if (refit_interval < 1) throw UsageError("refit interval must be positive");
  if (restarts < 1 || ascent_iters < 0) throw UsageError("bad acquisition optimizer settings");
  if (!(durations.mean > 0.0)) throw UsageError("durations must be positive");
}

namespace {

// The loops only need model sampling, expert access, and the two update
// paths; the ensemble and the single-GP baseline provide them separately.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual void update(std::span<const Observation> batch) = 0;
  virtual void append_and_refit(std::span<const Observation> batch, Rng& rng) = 0;
  [[nodiscard]] virtual std::size_t sample_model(Rng& rng) const = 0;
  [[nodiscard]] virtual const ExpertPosterior& expert(std::size_t m) const = 0;
  [[nodiscard]] virtual const Dataset& data() const = 0;
  [[nodiscard]] virtual nlohmann::json snapshot() const = 0;
};

class EnsembleSurrogate final : public Surrogate {
 public:
  explicit EnsembleSurrogate(EgpState state) : state_(std::move(state)) {}
  void update(std::span<const Observation> batch) override { state_.update(batch); }
  void append_and_refit(std::span<const Observation> batch, Rng& rng) override {
    state_.append_and_reinitialize(batch, rng);
  }
  [[nodiscard]] std::size_t sample_model(Rng& rng) const override { return state_.sample_model(rng); }
  [[nodiscard]] const ExpertPosterior& expert(std::size_t m) const override { return state_.expert(m); }
  [[nodiscard]] const Dataset& data() const override { return state_.data(); }
  [[nodiscard]] nlohmann::json snapshot() const override { return state_.to_json(); }

 private:
  EgpState state_;
};

class SingleGpSurrogate final : public Surrogate {
 public:
  SingleGpSurrogate(const KernelSpec& spec, Dataset data, const EnsembleOptions& options, Rng& rng)
      : spec_(spec), options_(options), data_(std::move(data)) {
    refit(rng);
  }
  void update(std::span<const Observation> batch) override {
    ExpertPosterior e = *expert_;
    Dataset data = data_;
    for (const auto& obs : batch) {
      e.update(obs.x, data.standardize(obs.y));
      data.append(obs.x, obs.y);
    }
    expert_ = std::move(e);
    data_ = std::move(data);
  }
  void append_and_refit(std::span<const Observation> batch, Rng& rng) override {
    for (const auto& obs : batch) data_.append(obs.x, obs.y);
    refit(rng);
  }
  [[nodiscard]] std::size_t sample_model(Rng&) const override { return 0; }
  [[nodiscard]] const ExpertPosterior& expert(std::size_t) const override { return *expert_; }
  [[nodiscard]] const Dataset& data() const override { return data_; }
  [[nodiscard]] nlohmann::json snapshot() const override {
    nlohmann::json j;
    j["data"] = data_.to_json();
    j["expert"] = expert_to_json(*expert_);
    return j;
  }

 private:
  void refit(Rng& rng) {
    data_.restandardize();
    const std::uint64_t fit_seed = rng();
    const std::uint64_t feature_seed = rng();
    KernelSpec spec = expert_ ? expert_->spec() : spec_;
    if (options_.fit_hyperparameters) {
      Rng fit_rng(fit_seed);
      spec = fit_hyperparameters(data_.X(), data_.y(), spec, options_.num_features, fit_rng,
                                 options_.fit)
                 .spec;
    }
    std::string failures;
    for (int attempt = 0; attempt < 4; ++attempt) {
      try {
        ExpertPosterior e = init_expert(spec, options_.num_features, data_.dim(), feature_seed);
        e.fit(data_.X(), data_.y());
        expert_ = std::move(e);
        return;
      } catch (const NumericalError& err) {
        failures += err.what();
        spec.noise_var *= 10.0;
      }
    }
    throw NumericalError("single GP failed to fit", failures);
  }

  KernelSpec spec_;
  EnsembleOptions options_;
  Dataset data_;
  std::optional<ExpertPosterior> expert_;
};

class Runner {
 public:
  Runner(const Problem& problem, const KernelDictionary* dict, const BOConfig& config)
      : problem_(problem),
        dict_(dict),
        config_(config),
        unit_(Box::unit(problem.box.dim())),
        init_rng_(make_stream(config.seed, Stream::InitPoints)),
        refit_rng_(make_stream(config.seed, Stream::RandomFeatures)),
        model_rng_(make_stream(config.seed, Stream::ModelSampling)),
        theta_rng_(make_stream(config.seed, Stream::ThetaSampling)),
        restart_rng_(make_stream(config.seed, Stream::Restarts)),
        duration_rng_(make_stream(config.seed, Stream::Durations)) {
    config_.validate();
    if (!problem_.evaluate) throw UsageError("problem has no evaluator");
    record_.run_id = config.run_id;
  }

  RunRecord sequential() {
    if (!initial_phase(true)) return record_;
    while (record_.size() < config_.budget) {
      const Proposal p = propose();
      const std::size_t index = record_.size();
      const double y = evaluate(p.x, index);
      clock_ += config_.durations.sample(duration_rng_);
      record(p.x, y, static_cast<long>(p.model), clock_, 0);
      const Observation obs{p.x, y};
      observe(std::span(&obs, 1));
    }
    return record_;
  }

  RunRecord sync() {
    if (!initial_phase(true)) return record_;
    while (record_.size() < config_.budget) {
      const std::size_t k = std::min(config_.workers, config_.budget - record_.size());
      std::vector<Proposal> proposals;
      for (std::size_t w = 0; w < k; ++w) proposals.push_back(propose());
      const std::size_t first = record_.size();
      std::vector<double> ys(k);
      if (config_.concurrent_eval && k > 1) {
        std::vector<std::future<double>> futures;
        for (std::size_t w = 0; w < k; ++w) {
          futures.push_back(std::async(std::launch::async, [this, &proposals, first, w] {
            return problem_.evaluate(unit_to_native(proposals[w].x), first + w);
          }));
        }
        for (std::size_t w = 0; w < k; ++w) {
          try {
            ys[w] = futures[w].get();
          } catch (const std::exception& e) {
            throw RunAborted(std::string("objective failed: ") + e.what(), record_);
          }
        }
      } else {
        for (std::size_t w = 0; w < k; ++w) ys[w] = evaluate(proposals[w].x, first + w);
      }
      double round = 0.0;
      for (std::size_t w = 0; w < k; ++w) round = std::max(round, config_.durations.sample(duration_rng_));
      clock_ += round;
      std::vector<Observation> batch;
      for (std::size_t w = 0; w < k; ++w) {
        record(proposals[w].x, ys[w], static_cast<long>(proposals[w].model), clock_, w);
        batch.push_back({proposals[w].x, ys[w]});
      }
      observe(batch);
    }
    return record_;
  }

  RunRecord async() {
    if (!initial_phase(true)) return record_;
    struct Job {
      Eigen::VectorXd x;
      std::size_t model;
      double y;
      double finish;
    };
    const std::size_t to_issue = config_.budget - config_.t0;
    std::size_t issued = 0;
    std::vector<std::optional<Job>> jobs(config_.workers);
    auto assign = [&](std::size_t worker, double now) {
      const Proposal p = propose();
      const double y = evaluate(p.x, config_.t0 + issued);
      ++issued;
      jobs[worker] = Job{p.x, p.model, y, now + config_.durations.sample(duration_rng_)};
    };
    for (std::size_t w = 0; w < config_.workers && issued < to_issue; ++w) assign(w, clock_);
    while (record_.size() < config_.budget) {
      std::size_t next = jobs.size();
      for (std::size_t w = 0; w < jobs.size(); ++w) {
        if (!jobs[w]) continue;
        if (next == jobs.size() || jobs[w]->finish < jobs[next]->finish) next = w;
      }
      Job job = std::move(*jobs[next]);
      jobs[next].reset();
      clock_ = job.finish;
      record(job.x, job.y, static_cast<long>(job.model), clock_, next);
      const Observation obs{job.x, job.y};
      observe(std::span(&obs, 1));
      if (issued < to_issue) assign(next, clock_);
    }
    return record_;
  }

  RunRecord random_search() {
    initial_phase(false);
    while (record_.size() < config_.budget) {
      const Eigen::VectorXd x = uniform_unit(init_rng_);
      const double y = evaluate(x, record_.size());
      clock_ += config_.durations.sample(duration_rng_);
      record(x, y, -1, clock_, 0);
    }
    return record_;
  }

 private:
  Eigen::VectorXd uniform_unit(Rng& rng) const {
    Eigen::VectorXd u(unit_.dim());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = uniform01(rng);
    return u;
  }

  Eigen::VectorXd unit_to_native(const Eigen::VectorXd& u) const { return problem_.box.from_unit(u); }

  double evaluate(const Eigen::VectorXd& u, std::size_t index) {
    try {
      const double y = problem_.evaluate(unit_to_native(u), index);
      if (!std::isfinite(y)) throw NumericalError("objective returned a non-finite value", std::to_string(y));
      return y;
    } catch (const RunAborted&) {
      throw;
    } catch (const std::exception& e) {
      throw RunAborted(std::string("objective failed: ") + e.what(), record_);
    }
  }

  void record(const Eigen::VectorXd& u, double y, long model, double time, std::size_t worker) {
    RunRow row;
    row.t = record_.size();
    row.worker = worker;
    row.virtual_time = time;
    row.model_index = model;
    row.x = unit_to_native(u);
    row.y = y;
    best_y_ = std::max(best_y_, y);
    row.best = best_y_;
    if (problem_.noiseless && problem_.f_star) {
      best_f_ = std::max(best_f_, problem_.noiseless(row.x));
      row.simple_regret = *problem_.f_star - best_f_;
    } else {
      row.simple_regret = std::numeric_limits<double>::quiet_NaN();
    }
    record_.rows.push_back(std::move(row));
  }

  // Returns false when the budget is used up by the initial design.
  bool initial_phase(bool build_model) {
    Dataset data0(unit_);
    for (std::size_t i = 0; i < config_.t0; ++i) {
      const Eigen::VectorXd u = uniform_unit(init_rng_);
      const double y = evaluate(u, i);
      record(u, y, -1, clock_, 0);
      data0.append(u, y);
    }
    if (!build_model || record_.size() >= config_.budget) return false;

    EnsembleOptions options;
    options.num_features = config_.rf_dim;
    options.weight_floor = config_.weight_floor;
    options.fit = config_.fit;
    if (config_.surrogate == SurrogateKind::SingleGp) {
      if (dict_->size() != 1) throw UsageError("single-GP runs take a one-entry dictionary");
      const KernelSpec spec = dict_->resolve(unit_.dim())[0];
      model_ = std::make_unique<SingleGpSurrogate>(spec, std::move(data0), options, refit_rng_);
    } else {
      model_ = std::make_unique<EnsembleSurrogate>(
          EgpState::initialize(*dict_, std::move(data0), options, refit_rng_));
    }
    last_refit_ = config_.t0;
    checkpoint();
    return true;
  }

  Proposal propose() {
    AscentOptions opts;
    opts.restarts = config_.restarts;
    opts.iters = config_.ascent_iters;
    const std::size_t m = model_->sample_model(model_rng_);
    const ExpertPosterior& expert = model_->expert(m);
    if (config_.acquisition == AcquisitionKind::ExpectedImprovement) {
      const double incumbent = model_->data().y().maxCoeff();
      return propose_ei_for(expert, m, incumbent, unit_, restart_rng_, opts);
    }
    return propose_ts_for(expert, m, unit_, theta_rng_, restart_rng_, opts);
  }

  void observe(std::span<const Observation> batch) {
    const std::size_t after = model_->data().size() + batch.size();
    if (after - last_refit_ >= config_.refit_interval) {
      model_->append_and_refit(batch, refit_rng_);
      last_refit_ = after;
      checkpoint();
    } else {
      model_->update(batch);
    }
  }

  void checkpoint() const {
    if (config_.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(config_.checkpoint_dir);
    const auto path = config_.checkpoint_dir / ("run" + std::to_string(config_.run_id) + "_t" +
                                                std::to_string(model_->data().size()) + ".json");
    std::ofstream out(path);
    out << model_->snapshot().dump();
  }

  const Problem& problem_;
  const KernelDictionary* dict_;
  BOConfig config_;
  Box unit_;
  Rng init_rng_;
  Rng refit_rng_;
  Rng model_rng_;
  Rng theta_rng_;
  Rng restart_rng_;
  Rng duration_rng_;
  std::unique_ptr<Surrogate> model_;
  RunRecord record_;
  std::size_t last_refit_ = 0;
  double clock_ = 0.0;
  double best_y_ = -std::numeric_limits<double>::infinity();
  double best_f_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

RunRecord run_sequential(const Problem& problem, const KernelDictionary& dict,
                         const BOConfig& config) {
  return Runner(problem, &dict, config).sequential();
}

RunRecord run_sync(const Problem& problem, const KernelDictionary& dict, const BOConfig& config) {
  return Runner(problem, &dict, config).sync();
}

RunRecord run_async(const Problem& problem, const KernelDictionary& dict, const BOConfig& config) {
  return Runner(problem, &dict, config).async();
}

RunRecord run_bo(const Problem& problem, const KernelDictionary& dict, const BOConfig& config) {
  switch (config.mode) {
    case RunMode::Sequential: return run_sequential(problem, dict, config);
    case RunMode::SyncParallel: return run_sync(problem, dict, config);
    case RunMode::AsyncParallel: return run_async(problem, dict, config);
  }
  throw UsageError("unknown run mode");
}

RunRecord baseline_random(const Problem& problem, const BOConfig& config) {
  return Runner(problem, nullptr, config).random_search();
}

}  // namespace egpbo
