#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "egpbo/kernel.hpp"

namespace egpbo {

/// Random Fourier feature embedding built from D spectral draws v_j:
///
///   phi(x) = [sin(v_1'x), cos(v_1'x), ..., sin(v_D'x), cos(v_D'x)] / sqrt(D)
///
/// so that phi(x)'phi(x') is an unbiased estimate of kbar(x - x') and
/// ||phi(x)|| == 1. Immutable once built.
class RandomFeatureMap {
 public:
  /// Wraps an explicit D x d spectral matrix.
  RandomFeatureMap(Eigen::MatrixXd spectral, KernelSpec spec,
                   std::optional<std::uint64_t> seed = std::nullopt);

  /// Draws D spectral vectors for `spec` from a generator seeded with `seed`.
  static RandomFeatureMap sample(const KernelSpec& spec, std::size_t num_features,
                                 Eigen::Index dim, std::uint64_t seed);

  [[nodiscard]] Eigen::Index num_features() const noexcept { return spectral_.rows(); }
  [[nodiscard]] Eigen::Index feature_dim() const noexcept { return 2 * spectral_.rows(); }
  [[nodiscard]] Eigen::Index input_dim() const noexcept { return spectral_.cols(); }
  [[nodiscard]] const Eigen::MatrixXd& spectral() const noexcept { return spectral_; }
  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

  [[nodiscard]] Eigen::VectorXd features(const Eigen::VectorXd& x) const;

  /// 2D x d Jacobian of features(): rows (2j, 2j+1) are
  /// (v_j cos(v_j'x), -v_j sin(v_j'x)) / sqrt(D).
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  /// phi(x)'phi(x2).
  [[nodiscard]] double kernel_approx(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const;

  /// t x 2D matrix whose rows are features(X.row(i)).
  [[nodiscard]] Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& X) const;

 private:
  void check_dim(Eigen::Index got) const;

  Eigen::MatrixXd spectral_;
  KernelSpec spec_;
  std::optional<std::uint64_t> seed_;
};

/// Writes the spec and seed; maps without a seed store their spectral rows.
nlohmann::json map_to_json(const RandomFeatureMap& map);
RandomFeatureMap map_from_json(const nlohmann::json& j);

}  // namespace egpbo
