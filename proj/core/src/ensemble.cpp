#include "egpbo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace

double gaussian_log_density(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

void floor_and_normalize(Eigen::VectorXd& log_weights, double floor) {
  const Eigen::Index M = log_weights.size();
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw NumericalError("ensemble weights degenerate", "logsumexp " + std::to_string(lse));
  Eigen::VectorXd w = (log_weights.array() - lse).exp().matrix();
  std::vector<bool> active(static_cast<std::size_t>(M));
  Eigen::Index n_active = 0;
  for (Eigen::Index m = 0; m < M; ++m) {
    active[static_cast<std::size_t>(m)] = std::isfinite(log_weights[m]);
    n_active += active[static_cast<std::size_t>(m)] ? 1 : 0;
  }
  if (floor > 0.0 && n_active > 1) {
    if (floor * static_cast<double>(n_active) > 1.0) {
      throw ContractError("weight floor too large for the number of models");
    }
    std::vector<bool> pinned(static_cast<std::size_t>(M), false);
    for (bool changed = true; changed;) {
      changed = false;
      double free_target = 1.0;
      double free_total = 0.0;
      for (Eigen::Index m = 0; m < M; ++m) {
        if (!active[static_cast<std::size_t>(m)]) continue;
        if (pinned[static_cast<std::size_t>(m)]) {
          free_target -= floor;
        } else {
          free_total += w[m];
        }
      }
      for (Eigen::Index m = 0; m < M; ++m) {
        const auto i = static_cast<std::size_t>(m);
        if (!active[i] || pinned[i]) continue;
        w[m] *= free_target / free_total;
      }
      for (Eigen::Index m = 0; m < M; ++m) {
        const auto i = static_cast<std::size_t>(m);
        if (active[i] && !pinned[i] && w[m] < floor) {
          pinned[i] = true;
          w[m] = floor;
          changed = true;
        }
      }
    }
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    log_weights[m] = active[static_cast<std::size_t>(m)] ? std::log(w[m]) : kNegInf;
  }
  // final exact renormalization in the log domain
  const double lse2 = log_sum_exp(log_weights);
  log_weights.array() -= lse2;
}

std::size_t sample_categorical(const Eigen::VectorXd& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index m = 0; m < p.size(); ++m) {
    if (p[m] <= 0.0) continue;
    last_positive = static_cast<std::size_t>(m);
    acc += p[m];
    if (u < acc) return static_cast<std::size_t>(m);
  }
  return last_positive;
}

EgpState EgpState::initialize(const KernelDictionary& dict, Dataset data0,
                              const EnsembleOptions& options, Rng& rng) {
  if (dict.size() == 0) throw ContractError("empty kernel dictionary");
  if (data0.size() < 2) throw ContractError("ensemble initialization needs at least 2 points");
  EgpState s;
  s.dict_ = dict.resolve(data0.dim());
  s.options_ = options;
  s.data_ = std::move(data0);
  s.refit(rng);
  return s;
}

void EgpState::refit(Rng& rng) {
  data_.restandardize();
  const Eigen::Index d = data_.dim();
  // One fit seed and one feature seed per refit, shared by all experts:
  // identical specs then get identical posteriors.
  const std::uint64_t fit_seed = rng();
  const std::uint64_t feature_seed = rng();

  std::vector<ExpertPosterior> experts;
  experts.reserve(dict_.size());
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(dict_.size()));
  std::size_t warnings = 0;
  std::size_t failures = 0;
  std::ostringstream failure_log;
  for (std::size_t m = 0; m < dict_.size(); ++m) {
    // warm start from the previous fit when there is one
    KernelSpec start = experts_.size() == dict_.size() ? experts_[m].spec() : dict_[m];
    KernelSpec spec = start;
    if (options_.fit_hyperparameters) {
      Rng fit_rng(fit_seed);
      const HyperFitResult fit =
          fit_hyperparameters(data_.X(), data_.y(), start, options_.num_features, fit_rng, options_.fit);
      spec = fit.spec;
      warnings += fit.warning ? 1 : 0;
    }
    std::optional<ExpertPosterior> fitted;
    for (int attempt = 0; attempt < 4 && !fitted; ++attempt) {
      try {
        ExpertPosterior e = init_expert(spec, options_.num_features, d, feature_seed);
        e.fit(data_.X(), data_.y());
        fitted = std::move(e);
      } catch (const NumericalError& err) {
        failure_log << "model " << m << ": " << err.what() << "; ";
        spec.noise_var *= 10.0;
      }
    }
    const auto mi = static_cast<Eigen::Index>(m);
    if (fitted) {
      log_w[mi] = -std::log(static_cast<double>(dict_.size())) + fitted->log_evidence();
      experts.push_back(std::move(*fitted));
    } else {
      ++failures;
      log_w[mi] = kNegInf;
      experts.push_back(init_expert(dict_[m], options_.num_features, d, feature_seed));
    }
  }
  if (failures == dict_.size()) {
    throw NumericalError("every expert failed to fit", failure_log.str());
  }
  floor_and_normalize(log_w, options_.weight_floor);
  experts_ = std::move(experts);
  log_weights_ = std::move(log_w);
  fit_warnings_ = warnings;
}

void EgpState::update(std::span<const Observation> batch) {
  if (batch.empty()) return;
  std::vector<ExpertPosterior> experts = experts_;
  Eigen::VectorXd log_w = log_weights_;
  Dataset data = data_;
  for (const auto& obs : batch) {
    if (!data.box().contains(obs.x)) throw ContractError("update: point outside the search box");
    const double y = data.standardize(obs.y);
    for (std::size_t m = 0; m < experts.size(); ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      if (!std::isfinite(log_w[mi])) continue;
      const Predictive p = experts[m].predict(obs.x);
      log_w[mi] += gaussian_log_density(y, p.mean, p.var);
      experts[m].update(obs.x, y);
    }
    floor_and_normalize(log_w, options_.weight_floor);
    data.append(obs.x, obs.y);
  }
  experts_ = std::move(experts);
  log_weights_ = std::move(log_w);
  data_ = std::move(data);
}

void EgpState::reinitialize(Rng& rng) {
  if (data_.size() == 0) throw ContractError("reinitialize: empty dataset");
  EgpState next = *this;
  next.refit(rng);
  *this = std::move(next);
}

void EgpState::append_and_reinitialize(std::span<const Observation> batch, Rng& rng) {
  EgpState next = *this;
  for (const auto& obs : batch) next.data_.append(obs.x, obs.y);
  next.refit(rng);
  *this = std::move(next);
}

std::size_t EgpState::sample_model(Rng& rng) const { return sample_categorical(weights(), rng); }

Eigen::VectorXd EgpState::weights() const { return log_weights_.array().exp().matrix(); }

std::vector<WeightedPredictive> EgpState::mixture_predict(const Eigen::VectorXd& x) const {
  std::vector<WeightedPredictive> out;
  out.reserve(experts_.size());
  for (std::size_t m = 0; m < experts_.size(); ++m) {
    out.push_back({std::exp(log_weights_[static_cast<Eigen::Index>(m)]), experts_[m].predict(x)});
  }
  return out;
}

double EgpState::mixture_mean(const Eigen::VectorXd& x) const {
  double mean = 0.0;
  for (const auto& wp : mixture_predict(x)) mean += wp.weight * wp.predictive.mean;
  return mean;
}

void EgpState::set_log_weights(Eigen::VectorXd log_weights) {
  if (log_weights.size() != static_cast<Eigen::Index>(experts_.size())) {
    throw ContractError("set_log_weights: wrong size");
  }
  log_weights.array() -= log_sum_exp(log_weights);
  log_weights_ = std::move(log_weights);
}

nlohmann::json EgpState::to_json() const {
  nlohmann::json j;
  j["dictionary"] = dict_.to_json();
  j["num_features"] = options_.num_features;
  j["weight_floor"] = options_.weight_floor;
  j["fit_hyperparameters"] = options_.fit_hyperparameters;
  j["data"] = data_.to_json();
  nlohmann::json experts = nlohmann::json::array();
  for (const auto& e : experts_) experts.push_back(expert_to_json(e));
  j["experts"] = experts;
  std::vector<double> lw(log_weights_.data(), log_weights_.data() + log_weights_.size());
  nlohmann::json lwj = nlohmann::json::array();
  for (double v : lw) lwj.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  j["log_weights"] = lwj;
  return j;
}

EgpState EgpState::from_json(const nlohmann::json& j) {
  EgpState s;
  s.dict_ = KernelDictionary::from_json(j.at("dictionary"));
  s.options_.num_features = j.at("num_features").get<std::size_t>();
  s.options_.weight_floor = j.at("weight_floor").get<double>();
  s.options_.fit_hyperparameters = j.value("fit_hyperparameters", true);
  s.data_ = Dataset::from_json(j.at("data"));
  for (const auto& e : j.at("experts")) s.experts_.push_back(expert_from_json(e));
  const auto& lw = j.at("log_weights");
  s.log_weights_.resize(static_cast<Eigen::Index>(lw.size()));
  for (std::size_t m = 0; m < lw.size(); ++m) {
    s.log_weights_[static_cast<Eigen::Index>(m)] = lw[m].is_null() ? kNegInf : lw[m].get<double>();
  }
  if (s.experts_.size() != s.dict_.size() || lw.size() != s.dict_.size()) {
    throw ContractError("ensemble snapshot has inconsistent model counts");
  }
  return s;
}

EgpState init_ensemble(const KernelDictionary& dict, Dataset data0, std::size_t num_features,
                       Rng& rng) {
  EnsembleOptions options;
  options.num_features = num_features;
  return EgpState::initialize(dict, std::move(data0), options, rng);
}

EgpState update(EgpState state, std::span<const Observation> batch) {
  state.update(batch);
  return state;
}

EgpState reinitialize(EgpState state, Rng& rng) {
  state.reinitialize(rng);
  return state;
}

std::size_t sample_model(const EgpState& state, Rng& rng) { return state.sample_model(rng); }

std::vector<WeightedPredictive> mixture_predict(const EgpState& state, const Eigen::VectorXd& x) {
  return state.mixture_predict(x);
}

}  // namespace egpbo
