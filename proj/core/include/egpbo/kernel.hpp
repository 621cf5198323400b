#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "egpbo/random.hpp"

namespace egpbo {

enum class KernelFamily { SqExp, SqExpArd, Matern };

/// Noise variance may not drop below this fraction of the amplitude.
inline constexpr double kNoiseFloorRatio = 1e-6;

/// A stationary kernel sigma_theta^2 * kbar(x - x') plus the Gaussian
/// observation noise of the model that uses it.
struct KernelSpec {
  KernelFamily family = KernelFamily::SqExp;
  double nu = 2.5;                 // Matern smoothness, 1.5 or 2.5
  Eigen::VectorXd lengthscales = Eigen::VectorXd::Ones(1);
  double amplitude = 1.0;          // sigma_theta^2
  double noise_var = 1e-2;         // sigma_n^2
  bool learn_lengthscales = true;  // false pins lengthscales during evidence fitting

  [[nodiscard]] bool is_ard() const noexcept { return lengthscales.size() > 1; }

  /// Throws ContractError unless the spec is usable in `dim` dimensions.
  /// A negative `dim` skips the dimension check.
  void validate(Eigen::Index dim = -1) const;

  /// Short label such as "rbf", "rbf_ard", "matern1.5".
  [[nodiscard]] std::string name() const;

  /// Raises noise_var to the noise floor if needed.
  [[nodiscard]] KernelSpec with_noise_floor() const;
};

bool operator==(const KernelSpec& a, const KernelSpec& b);

/// Standardized kernel kbar as a function of the lengthscale-scaled
/// distance r (kbar(0) == 1).
double standardized_kernel(const KernelSpec& spec, double scaled_distance);

/// sigma_theta^2 * kbar(x - x2).
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& x2);

/// Kernel matrix over the rows of X (no noise on the diagonal).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);

/// Draws `count` i.i.d. spectral vectors (rows) from the spectral density of
/// the standardized kernel in `dim` dimensions.
///
/// SqExp: N(0, diag(l^-2)). Matern: multivariate Student-t with 2*nu degrees
/// of freedom, v = z * sqrt(2 nu / u) / l with u ~ chi2(2 nu). The draw is
/// always a fixed base sample divided elementwise by the lengthscales, so two
/// specs differing only in lengthscales give proportional matrices for the
/// same generator state.
Eigen::MatrixXd spectral_sample(const KernelSpec& spec, std::size_t count, Eigen::Index dim,
                                Rng& rng);

/// Unit-lengthscale spectral draw for `spec`'s family; spectral_sample()
/// divides this by the lengthscales.
Eigen::MatrixXd base_spectral_sample(const KernelSpec& spec, std::size_t count,
                                     Eigen::Index dim, Rng& rng);

/// Divides each column of a base spectral sample by the matching lengthscale.
Eigen::MatrixXd scale_spectral(const Eigen::MatrixXd& base, const Eigen::VectorXd& lengthscales);

/// Ordered list of candidate kernels; model index m refers to position m.
class KernelDictionary {
 public:
  KernelDictionary() = default;
  explicit KernelDictionary(std::vector<KernelSpec> entries);

  /// Parses either a comma list of kernel names ("rbf,rbf_ard,matern1.5,
  /// matern2.5"), a lengthscale sweep "rbf:logspace(lo,hi,n)", or a path
  /// to a JSON dictionary file.
  static KernelDictionary parse(std::string_view text);
  static KernelDictionary from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;

  /// Broadcasts scalar ARD lengthscales to `dim` and validates every entry.
  [[nodiscard]] KernelDictionary resolve(Eigen::Index dim) const;

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] const KernelSpec& operator[](std::size_t m) const { return entries_.at(m); }
  [[nodiscard]] const std::vector<KernelSpec>& entries() const noexcept { return entries_; }

 private:
  std::vector<KernelSpec> entries_;
};

/// Default unit-cube lengthscale for shorthand dictionary entries.
inline constexpr double kDefaultLengthscale = 0.2;

KernelSpec kernel_from_name(std::string_view name);

void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);

}  // namespace egpbo
