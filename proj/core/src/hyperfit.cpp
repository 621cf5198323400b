#include "egpbo/hyperfit.hpp"

#include <cmath>
#include <limits>

#include "egpbo/errors.hpp"
#include "egpbo/gp_expert.hpp"
#include "egpbo/rf_map.hpp"

namespace egpbo {

namespace {

class EvidenceObjective {
 public:
  EvidenceObjective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelSpec spec,
                    Eigen::MatrixXd base, const HyperFitOptions& opt)
      : X_(X), y_(y), spec_(std::move(spec)), base_(std::move(base)) {
    n_ls_ = spec_.learn_lengthscales ? spec_.lengthscales.size() : 0;
    const Eigen::Index p = n_ls_ + 2;
    lo_.resize(p);
    hi_.resize(p);
    lo_.head(n_ls_).setConstant(opt.log10_lengthscale_lo);
    hi_.head(n_ls_).setConstant(opt.log10_lengthscale_hi);
    lo_[n_ls_] = opt.log10_amplitude_lo;
    hi_[n_ls_] = opt.log10_amplitude_hi;
    lo_[n_ls_ + 1] = opt.log10_noise_lo;
    hi_[n_ls_ + 1] = opt.log10_noise_hi;
    start_lo_ = lo_;
    start_hi_ = hi_;
    start_lo_.head(n_ls_).setConstant(opt.start_log10_lengthscale_lo);
    start_hi_.head(n_ls_).setConstant(opt.start_log10_lengthscale_hi);
    start_lo_[n_ls_] = opt.start_log10_amplitude_lo;
    start_hi_[n_ls_] = opt.start_log10_amplitude_hi;
    start_lo_[n_ls_ + 1] = opt.start_log10_noise_lo;
    start_hi_[n_ls_ + 1] = opt.start_log10_noise_hi;
    start_lo_ = clamp(start_lo_);
    start_hi_ = clamp(start_hi_);
  }

  [[nodiscard]] Eigen::Index size() const { return lo_.size(); }
  [[nodiscard]] const Eigen::VectorXd& lo() const { return lo_; }
  [[nodiscard]] const Eigen::VectorXd& hi() const { return hi_; }

  [[nodiscard]] Eigen::VectorXd random_start(Rng& rng) const {
    Eigen::VectorXd p(size());
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p[i] = start_lo_[i] + uniform01(rng) * (start_hi_[i] - start_lo_[i]);
    return p;
  }

  [[nodiscard]] Eigen::VectorXd encode(const KernelSpec& s) const {
    Eigen::VectorXd p(size());
    if (n_ls_ > 0) p.head(n_ls_) = s.lengthscales.array().log10().matrix();
    p[n_ls_] = std::log10(s.amplitude);
    p[n_ls_ + 1] = std::log10(s.noise_var);
    return clamp(p);
  }

  [[nodiscard]] KernelSpec decode(const Eigen::VectorXd& p) const {
    KernelSpec s = spec_;
    if (n_ls_ > 0) {
      s.lengthscales = Eigen::VectorXd(n_ls_);
      for (Eigen::Index i = 0; i < n_ls_; ++i) s.lengthscales[i] = std::pow(10.0, p[i]);
    }
    s.amplitude = std::pow(10.0, p[n_ls_]);
    s.noise_var = std::pow(10.0, p[n_ls_ + 1]);
    return s.with_noise_floor();
  }

  [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd& p) const {
    return p.cwiseMax(lo_).cwiseMin(hi_);
  }

  double operator()(const Eigen::VectorXd& p) {
    ++evaluations;
    const KernelSpec s = decode(p);
    const RandomFeatureMap map(scale_spectral(base_, s.lengthscales), s);
    const double v = rf_log_evidence(map.feature_matrix(X_), y_, s.amplitude, s.noise_var);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  }

  int evaluations = 0;

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  KernelSpec spec_;
  Eigen::MatrixXd base_;
  Eigen::Index n_ls_ = 0;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  Eigen::VectorXd start_lo_;
  Eigen::VectorXd start_hi_;
};

struct AscentPoint {
  Eigen::VectorXd p;
  double value;
};

Eigen::VectorXd projected_gradient(EvidenceObjective& f, const Eigen::VectorXd& p,
                                   const HyperFitOptions& opt) {
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd up = p, down = p;
    up[i] += opt.fd_step;
    down[i] -= opt.fd_step;
    g[i] = (f(up) - f(down)) / (2.0 * opt.fd_step);
    if (!std::isfinite(g[i])) g[i] = 0.0;
    if ((p[i] <= f.lo()[i] && g[i] < 0.0) || (p[i] >= f.hi()[i] && g[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

// Quasi-Newton (BFGS) directions with a halving line search; falls back to
// the scaled gradient whenever the curvature model stops giving ascent.
AscentPoint ascend(EvidenceObjective& f, Eigen::VectorXd p, const HyperFitOptions& opt) {
  double value = f(p);
  if (!std::isfinite(value)) return {std::move(p), value};
  const Eigen::Index n = p.size();
  const double max_step = 4.0 * opt.initial_step;
  Eigen::VectorXd g = projected_gradient(f, p, opt);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  int stalled = 0;
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    const double gnorm = g.norm();
    if (gnorm < 1e-8) break;
    Eigen::VectorXd d = H * g;
    if (fresh || g.dot(d) <= 0.0) {
      d = g * (opt.initial_step / gnorm);
      H = Eigen::MatrixXd::Identity(n, n) * (opt.initial_step / gnorm);
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if ((p[i] <= f.lo()[i] && d[i] < 0.0) || (p[i] >= f.hi()[i] && d[i] > 0.0)) d[i] = 0.0;
    if (d.norm() > max_step) d *= max_step / d.norm();

    bool improved = false;
    for (double alpha = 1.0; alpha * d.norm() >= opt.min_step; alpha *= 0.5) {
      Eigen::VectorXd cand = f.clamp(p + alpha * d);
      const double v = f(cand);
      if (v > value) {
        const Eigen::VectorXd step = cand - p;
        const double gain = v - value;
        p = std::move(cand);
        value = v;
        stalled = gain < opt.ftol * (1.0 + std::abs(value)) ? stalled + 1 : 0;
        const Eigen::VectorXd g_new = projected_gradient(f, p, opt);
        const Eigen::VectorXd yk = g - g_new;
        const double sy = step.dot(yk);
        if (sy > 1e-12 * step.norm() * yk.norm()) {
          const double rho = 1.0 / sy;
          const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n) - rho * yk * step.transpose();
          H = V.transpose() * H * V + rho * step * step.transpose();
          fresh = false;
        } else {
          fresh = true;
        }
        g = g_new;
        improved = true;
        break;
      }
    }
    if (!improved) {
      if (fresh) break;
      fresh = true;
      continue;
    }
    if (stalled >= 3) break;
  }
  return {std::move(p), value};
}

}  // namespace

HyperFitResult fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const KernelSpec& spec, std::size_t num_features, Rng& rng,
                                   const HyperFitOptions& options) {
  if (X.rows() < 2) throw ContractError("fit_hyperparameters needs at least 2 observations");
  if (X.rows() != y.size()) throw ContractError("fit_hyperparameters: X and y row counts differ");
  spec.validate(X.cols());

  Rng base_rng(rng());
  EvidenceObjective objective(X, y, spec,
                              base_spectral_sample(spec, num_features, X.cols(), base_rng), options);

  std::vector<Eigen::VectorXd> starts{objective.encode(spec)};
  for (int r = 0; r < options.restarts; ++r) starts.push_back(objective.random_start(rng));

  HyperFitResult result;
  result.initial_log_evidence = objective(starts.front());
  AscentPoint best{starts.front(), result.initial_log_evidence};
  for (const auto& start : starts) {
    AscentPoint cur = ascend(objective, start, options);
    if (std::isfinite(cur.value) && !(cur.value <= best.value)) best = std::move(cur);
  }
  result.warning = !std::isfinite(best.value);
  result.spec = result.warning ? spec.with_noise_floor() : objective.decode(best.p);
  result.log_evidence = best.value;
  result.evaluations = objective.evaluations;
  return result;
}

}  // namespace egpbo
