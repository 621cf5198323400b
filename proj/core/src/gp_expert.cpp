#include "egpbo/gp_expert.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kMinRcond = 1e-12;

}  // namespace

ExpertPosterior::ExpertPosterior(KernelSpec spec, RandomFeatureMap map)
    : spec_(std::move(spec)), map_(std::move(map)) {
  spec_.validate(map_.input_dim());
  theta_mean_ = Eigen::VectorXd::Zero(map_.feature_dim());
  theta_cov_ = spec_.amplitude * Eigen::MatrixXd::Identity(map_.feature_dim(), map_.feature_dim());
}

Predictive ExpertPosterior::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd phi = map_.features(x);
  const double quad = phi.dot(theta_cov_ * phi);
  return {phi.dot(theta_mean_), std::max(quad, 0.0) + spec_.noise_var};
}

void ExpertPosterior::update(const Eigen::VectorXd& x, double y) {
  const Eigen::VectorXd phi = map_.features(x);
  const Eigen::VectorXd s = theta_cov_ * phi;
  const double sigma2 = phi.dot(s) + spec_.noise_var;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(y)) {
    std::ostringstream diag;
    diag << "predictive variance " << sigma2 << ", y " << y << ", n_obs " << n_obs_;
    throw NumericalError("recursive update failed", diag.str());
  }
  const double innovation = y - phi.dot(theta_mean_);
  theta_mean_ += s * (innovation / sigma2);
  theta_cov_.noalias() -= (s * s.transpose()) / sigma2;
  log_evidence_ += -0.5 * (kLog2Pi + std::log(sigma2) + innovation * innovation / sigma2);
  ++n_obs_;
}

void ExpertPosterior::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw ContractError("batch_fit: X and y row counts differ");
  const Eigen::Index n = map_.feature_dim();
  if (X.rows() == 0) {
    theta_mean_ = Eigen::VectorXd::Zero(n);
    theta_cov_ = spec_.amplitude * Eigen::MatrixXd::Identity(n, n);
    log_evidence_ = 0.0;
    n_obs_ = 0;
    return;
  }
  const Eigen::MatrixXd Phi = map_.feature_matrix(X);
  const double sn2 = spec_.noise_var;
  const double st2 = spec_.amplitude;

  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(n, n) / st2;
  precision.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose(), 1.0 / sn2);
  // LLT reads the lower triangle only.
  const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(precision);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (rcond < kMinRcond) {
    std::ostringstream diag;
    diag << "rcond " << rcond << ", t " << X.rows() << ", 2D " << n << ", sigma_n^2 " << sn2
         << ", sigma_theta^2 " << st2;
    throw NumericalError("batch posterior is ill-conditioned", diag.str());
  }

  Eigen::VectorXd mean = llt.solve(Phi.transpose() * y) / sn2;
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  cov = 0.5 * (cov + cov.transpose()).eval();

  // log|C| = t log sn2 + 2D log st2 + log|A|;  y'C^-1 y = |y - Phi m|^2/sn2 + |m|^2/st2
  const Eigen::VectorXd diagL = Eigen::MatrixXd(llt.matrixL()).diagonal();
  const double logdet_a = 2.0 * diagL.array().log().sum();
  const auto t = static_cast<double>(X.rows());
  const double logdet = t * std::log(sn2) + static_cast<double>(n) * std::log(st2) + logdet_a;
  const double quad = (y - Phi * mean).squaredNorm() / sn2 + mean.squaredNorm() / st2;

  theta_mean_ = std::move(mean);
  theta_cov_ = std::move(cov);
  log_evidence_ = -0.5 * (quad + logdet + t * kLog2Pi);
  n_obs_ = static_cast<std::size_t>(X.rows());
}

void ExpertPosterior::set_state(Eigen::VectorXd mean, Eigen::MatrixXd cov, double log_evidence,
                                std::size_t n_obs) {
  const Eigen::Index n = map_.feature_dim();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
    throw ContractError("expert state has wrong dimensions");
  }
  theta_mean_ = std::move(mean);
  theta_cov_ = std::move(cov);
  log_evidence_ = log_evidence;
  n_obs_ = n_obs;
}

ExpertPosterior init_expert(const KernelSpec& spec, std::size_t num_features, Eigen::Index dim,
                            std::uint64_t seed) {
  return ExpertPosterior(spec, RandomFeatureMap::sample(spec, num_features, dim, seed));
}

ExpertPosterior batch_fit(const ExpertPosterior& expert, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y) {
  ExpertPosterior out = expert;
  out.fit(X, y);
  return out;
}

Predictive predictive(const ExpertPosterior& expert, const Eigen::VectorXd& x) {
  return expert.predict(x);
}

ExpertPosterior recursive_update(ExpertPosterior expert, const Eigen::VectorXd& x, double y) {
  expert.update(x, y);
  return expert;
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  double scale = cov.trace() / static_cast<double>(n);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1e-12;
  for (double rel = 1e-9; rel <= 1e-3 * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite()) return L;
    }
  }
  std::ostringstream diag;
  diag << "trace/n " << scale << ", n " << n;
  throw NumericalError("covariance factorization failed at maximum jitter", diag.str());
}

Eigen::VectorXd sample_theta(const ExpertPosterior& expert, Rng& rng) {
  const Eigen::MatrixXd L = jittered_cholesky(expert.theta_cov());
  Eigen::VectorXd z(L.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
  return expert.theta_mean() + L.triangularView<Eigen::Lower>() * z;
}

double log_evidence(const ExpertPosterior& expert) { return expert.log_evidence(); }

double rf_log_evidence(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double amplitude,
                       double noise_var) {
  const Eigen::Index t = Phi.rows();
  const Eigen::Index n = Phi.cols();
  if (t == 0) return 0.0;
  constexpr double kFail = -std::numeric_limits<double>::infinity();
  if (t <= n) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(t, t) * noise_var;
    C.selfadjointView<Eigen::Lower>().rankUpdate(Phi, amplitude);
    const Eigen::LLT<Eigen::MatrixXd> llt(C.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) return kFail;
    const Eigen::VectorXd alpha = llt.matrixL().solve(y);
    const Eigen::VectorXd diagL = Eigen::MatrixXd(llt.matrixL()).diagonal();
    const double logdet = 2.0 * diagL.array().log().sum();
    return -0.5 * (alpha.squaredNorm() + logdet + static_cast<double>(t) * kLog2Pi);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) / amplitude;
  A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose(), 1.0 / noise_var);
  const Eigen::LLT<Eigen::MatrixXd> llt(A.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) return kFail;
  const Eigen::VectorXd mean = llt.solve(Phi.transpose() * y) / noise_var;
  const Eigen::VectorXd diagL = Eigen::MatrixXd(llt.matrixL()).diagonal();
  const double logdet = static_cast<double>(t) * std::log(noise_var) +
                        static_cast<double>(n) * std::log(amplitude) +
                        2.0 * diagL.array().log().sum();
  const double quad = (y - Phi * mean).squaredNorm() / noise_var + mean.squaredNorm() / amplitude;
  return -0.5 * (quad + logdet + static_cast<double>(t) * kLog2Pi);
}

nlohmann::json expert_to_json(const ExpertPosterior& expert) {
  nlohmann::json j;
  j["map"] = map_to_json(expert.map());
  j["spec"] = expert.spec();
  const auto& m = expert.theta_mean();
  j["theta_mean"] = std::vector<double>(m.data(), m.data() + m.size());
  std::vector<double> upper;
  const auto& S = expert.theta_cov();
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index k = i; k < S.cols(); ++k) upper.push_back(S(i, k));
  j["theta_cov_upper"] = upper;
  j["log_evidence"] = expert.log_evidence();
  j["n_obs"] = expert.n_obs();
  return j;
}

ExpertPosterior expert_from_json(const nlohmann::json& j) {
  ExpertPosterior expert(j.at("spec").get<KernelSpec>(), map_from_json(j.at("map")));
  const auto mean = j.at("theta_mean").get<std::vector<double>>();
  const auto upper = j.at("theta_cov_upper").get<std::vector<double>>();
  const Eigen::Index n = expert.map().feature_dim();
  if (static_cast<Eigen::Index>(mean.size()) != n ||
      static_cast<Eigen::Index>(upper.size()) != n * (n + 1) / 2) {
    throw ContractError("expert snapshot has wrong sizes");
  }
  Eigen::MatrixXd S(n, n);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i; k < n; ++k) {
      S(i, k) = upper[idx];
      S(k, i) = upper[idx];
      ++idx;
    }
  }
  expert.set_state(Eigen::Map<const Eigen::VectorXd>(mean.data(), n), std::move(S),
                   j.at("log_evidence").get<double>(), j.at("n_obs").get<std::size_t>());
  return expert;
}

}  // namespace egpbo
