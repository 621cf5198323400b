#include "egpbo/rf_map.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

RandomFeatureMap::RandomFeatureMap(Eigen::MatrixXd spectral, KernelSpec spec,
                                   std::optional<std::uint64_t> seed)
    : spectral_(std::move(spectral)), spec_(std::move(spec)), seed_(seed) {
  if (spectral_.rows() < 1) throw ContractError("random feature map needs D >= 1");
  if (spectral_.cols() < 1) throw ContractError("random feature map needs d >= 1");
}

RandomFeatureMap RandomFeatureMap::sample(const KernelSpec& spec, std::size_t num_features,
                                          Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return RandomFeatureMap(spectral_sample(spec, num_features, dim, rng), spec, seed);
}

void RandomFeatureMap::check_dim(Eigen::Index got) const {
  if (got != input_dim()) {
    throw ContractError("feature map expects dimension " + std::to_string(input_dim()) +
                        ", got " + std::to_string(got));
  }
}

Eigen::VectorXd RandomFeatureMap::features(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  const Eigen::VectorXd proj = spectral_ * x;
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_features()));
  Eigen::VectorXd phi(feature_dim());
  for (Eigen::Index j = 0; j < num_features(); ++j) {
    phi[2 * j] = std::sin(proj[j]) * scale;
    phi[2 * j + 1] = std::cos(proj[j]) * scale;
  }
  return phi;
}

Eigen::MatrixXd RandomFeatureMap::jacobian(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  const Eigen::VectorXd proj = spectral_ * x;
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_features()));
  Eigen::MatrixXd J(feature_dim(), input_dim());
  for (Eigen::Index j = 0; j < num_features(); ++j) {
    J.row(2 * j) = spectral_.row(j) * (std::cos(proj[j]) * scale);
    J.row(2 * j + 1) = spectral_.row(j) * (-std::sin(proj[j]) * scale);
  }
  return J;
}

double RandomFeatureMap::kernel_approx(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const {
  // Summed in a fixed pairwise order so the result is symmetric bit for bit.
  const Eigen::VectorXd a = features(x);
  const Eigen::VectorXd b = features(x2);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

Eigen::MatrixXd RandomFeatureMap::feature_matrix(const Eigen::MatrixXd& X) const {
  check_dim(X.cols());
  const Eigen::MatrixXd proj = X * spectral_.transpose();  // t x D
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_features()));
  Eigen::MatrixXd Phi(X.rows(), feature_dim());
  for (Eigen::Index j = 0; j < num_features(); ++j) {
    Phi.col(2 * j) = proj.col(j).array().sin() * scale;
    Phi.col(2 * j + 1) = proj.col(j).array().cos() * scale;
  }
  return Phi;
}

nlohmann::json map_to_json(const RandomFeatureMap& map) {
  nlohmann::json j;
  j["spec"] = map.spec();
  j["num_features"] = map.num_features();
  j["input_dim"] = map.input_dim();
  if (map.seed()) {
    j["seed"] = *map.seed();
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < map.spectral().rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(map.input_dim()));
      for (Eigen::Index c = 0; c < map.input_dim(); ++c) row[static_cast<std::size_t>(c)] = map.spectral()(r, c);
      rows.push_back(row);
    }
    j["spectral"] = rows;
  }
  return j;
}

RandomFeatureMap map_from_json(const nlohmann::json& j) {
  const auto spec = j.at("spec").get<KernelSpec>();
  const auto D = j.at("num_features").get<std::size_t>();
  const auto d = j.at("input_dim").get<Eigen::Index>();
  if (j.contains("seed")) return RandomFeatureMap::sample(spec, D, d, j.at("seed").get<std::uint64_t>());
  const auto& rows = j.at("spectral");
  Eigen::MatrixXd V(static_cast<Eigen::Index>(D), d);
  for (Eigen::Index r = 0; r < V.rows(); ++r)
    for (Eigen::Index c = 0; c < d; ++c) V(r, c) = rows.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return RandomFeatureMap(std::move(V), spec);
}

}  // namespace egpbo
