#include "egpbo/kernel.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

namespace {

bool is_half_integer_nu(double nu) { return nu == 1.5 || nu == 2.5; }

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\n\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\n\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

}  // namespace

void KernelSpec::validate(Eigen::Index dim) const {
  if (lengthscales.size() < 1) throw ContractError("kernel has no lengthscales");
  if (dim >= 0 && lengthscales.size() != 1 && lengthscales.size() != dim) {
    throw ContractError("kernel has " + std::to_string(lengthscales.size()) +
                        " lengthscales for input dimension " + std::to_string(dim));
  }
  if ((lengthscales.array() <= 0.0).any() || !lengthscales.allFinite()) {
    throw ContractError("lengthscales must be positive and finite");
  }
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw ContractError("kernel amplitude must be positive");
  }
  if (!(noise_var >= kNoiseFloorRatio * amplitude) || !std::isfinite(noise_var)) {
    throw ContractError("noise variance below floor " + std::to_string(kNoiseFloorRatio) +
                        " * amplitude");
  }
  if (family == KernelFamily::Matern && !is_half_integer_nu(nu)) {
    throw ContractError("Matern nu must be 1.5 or 2.5");
  }
  if (family == KernelFamily::SqExp && lengthscales.size() != 1) {
    throw ContractError("isotropic SqExp kernel takes a single lengthscale");
  }
}

std::string KernelSpec::name() const {
  switch (family) {
    case KernelFamily::SqExp: return "rbf";
    case KernelFamily::SqExpArd: return "rbf_ard";
    case KernelFamily::Matern: return nu == 1.5 ? "matern1.5" : "matern2.5";
  }
  return "unknown";
}

KernelSpec KernelSpec::with_noise_floor() const {
  KernelSpec out = *this;
  out.noise_var = std::max(noise_var, kNoiseFloorRatio * amplitude);
  return out;
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  return a.family == b.family && a.nu == b.nu && a.lengthscales.size() == b.lengthscales.size() &&
         a.lengthscales == b.lengthscales && a.amplitude == b.amplitude &&
         a.noise_var == b.noise_var && a.learn_lengthscales == b.learn_lengthscales;
}

double standardized_kernel(const KernelSpec& spec, double r) {
  switch (spec.family) {
    case KernelFamily::SqExp:
    case KernelFamily::SqExpArd:
      return std::exp(-0.5 * r * r);
    case KernelFamily::Matern:
      if (spec.nu == 1.5) {
        const double a = std::sqrt(3.0) * r;
        return (1.0 + a) * std::exp(-a);
      } else {
        const double a = std::sqrt(5.0) * r;
        return (1.0 + a + a * a / 3.0) * std::exp(-a);
      }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  if (x.size() != x2.size()) {
    throw ContractError("kernel_eval: dimension mismatch " + std::to_string(x.size()) + " vs " +
                        std::to_string(x2.size()));
  }
  if (spec.lengthscales.size() != 1 && spec.lengthscales.size() != x.size()) {
    throw ContractError("kernel_eval: lengthscale count does not match input dimension");
  }
  double r2 = 0.0;
  if (spec.lengthscales.size() == 1) {
    r2 = (x - x2).squaredNorm() / (spec.lengthscales[0] * spec.lengthscales[0]);
  } else {
    r2 = ((x - x2).array() / spec.lengthscales.array()).square().sum();
  }
  return spec.amplitude * standardized_kernel(spec, std::sqrt(r2));
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = kernel_eval(spec, X.row(i).transpose(), X.row(i).transpose());
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = kernel_eval(spec, X.row(i).transpose(), X.row(j).transpose());
      K(j, i) = K(i, j);
    }
  }
  return K;
}

Eigen::MatrixXd base_spectral_sample(const KernelSpec& spec, std::size_t count, Eigen::Index dim,
                                     Rng& rng) {
  if (count == 0) throw ContractError("spectral_sample: empty feature map (D = 0)");
  if (dim < 1) throw ContractError("spectral_sample: input dimension must be positive");
  const auto rows = static_cast<Eigen::Index>(count);
  Eigen::MatrixXd V(rows, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (spec.family == KernelFamily::Matern) {
    std::chi_squared_distribution<double> chi2(2.0 * spec.nu);
    for (Eigen::Index j = 0; j < rows; ++j) {
      for (Eigen::Index k = 0; k < dim; ++k) V(j, k) = normal(rng);
      const double u = chi2(rng);
      V.row(j) *= std::sqrt(2.0 * spec.nu / u);
    }
  } else {
    for (Eigen::Index j = 0; j < rows; ++j)
      for (Eigen::Index k = 0; k < dim; ++k) V(j, k) = normal(rng);
  }
  return V;
}

Eigen::MatrixXd scale_spectral(const Eigen::MatrixXd& base, const Eigen::VectorXd& lengthscales) {
  if (lengthscales.size() == 1) return base / lengthscales[0];
  if (lengthscales.size() != base.cols()) {
    throw ContractError("scale_spectral: lengthscale count does not match input dimension");
  }
  return base * lengthscales.cwiseInverse().asDiagonal();
}

Eigen::MatrixXd spectral_sample(const KernelSpec& spec, std::size_t count, Eigen::Index dim,
                                Rng& rng) {
  spec.validate(dim);
  return scale_spectral(base_spectral_sample(spec, count, dim, rng), spec.lengthscales);
}

// ---------------------------------------------------------------------------
// Dictionary

KernelDictionary::KernelDictionary(std::vector<KernelSpec> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ContractError("kernel dictionary must have at least one entry");
}

KernelSpec kernel_from_name(std::string_view raw) {
  const std::string name = trim(raw);
  KernelSpec spec;
  spec.lengthscales = Eigen::VectorXd::Constant(1, kDefaultLengthscale);
  if (name == "rbf" || name == "sqexp") {
    spec.family = KernelFamily::SqExp;
  } else if (name == "rbf_ard" || name == "sqexp_ard") {
    spec.family = KernelFamily::SqExpArd;
  } else if (name == "matern1.5" || name == "matern32") {
    spec.family = KernelFamily::Matern;
    spec.nu = 1.5;
  } else if (name == "matern2.5" || name == "matern52") {
    spec.family = KernelFamily::Matern;
    spec.nu = 2.5;
  } else {
    throw UsageError("unknown kernel '" + name +
                     "' (choices: rbf, rbf_ard, matern1.5, matern2.5)");
  }
  return spec;
}

namespace {

// "rbf:logspace(-4,6,11)"
KernelDictionary parse_sweep(const std::string& text) {
  const auto colon = text.find(':');
  const KernelSpec base = kernel_from_name(text.substr(0, colon));
  const std::string rest = trim(text.substr(colon + 1));
  const std::string prefix = "logspace(";
  if (rest.rfind(prefix, 0) != 0 || rest.back() != ')') {
    throw UsageError("expected logspace(lo,hi,n) after ':' in '" + text + "'");
  }
  std::stringstream args(rest.substr(prefix.size(), rest.size() - prefix.size() - 1));
  std::vector<std::string> parts;
  for (std::string item; std::getline(args, item, ',');) parts.push_back(trim(item));
  if (parts.size() != 3) throw UsageError("logspace takes three arguments");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double n_real = parse_double(parts[2]);
  if (n_real < 1 || n_real != std::floor(n_real)) throw UsageError("logspace count must be >= 1");
  const auto n = static_cast<int>(n_real);
  std::vector<KernelSpec> entries;
  for (int i = 0; i < n; ++i) {
    KernelSpec s = base;
    const double c = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    s.lengthscales = Eigen::VectorXd::Constant(1, std::pow(10.0, c));
    s.learn_lengthscales = false;
    entries.push_back(s);
  }
  return KernelDictionary(std::move(entries));
}

}  // namespace

KernelDictionary KernelDictionary::parse(std::string_view raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw UsageError("empty kernel dictionary");
  if (text.size() > 5 && text.substr(text.size() - 5) == ".json") {
    std::ifstream in{std::filesystem::path(text)};
    if (!in) throw UsageError("cannot open dictionary file '" + text + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("malformed dictionary file '" + text + "': " + e.what());
    }
    return from_json(j);
  }
  if (text.find(':') != std::string::npos) return parse_sweep(text);
  std::vector<KernelSpec> entries;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) entries.push_back(kernel_from_name(item));
  return KernelDictionary(std::move(entries));
}

KernelDictionary KernelDictionary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw UsageError("kernel dictionary JSON must be an array");
  std::vector<KernelSpec> entries;
  for (const auto& e : j) entries.push_back(e.get<KernelSpec>());
  return KernelDictionary(std::move(entries));
}

nlohmann::json KernelDictionary::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries_) j.push_back(e);
  return j;
}

KernelDictionary KernelDictionary::resolve(Eigen::Index dim) const {
  std::vector<KernelSpec> out = entries_;
  for (auto& s : out) {
    if (s.family == KernelFamily::SqExpArd && s.lengthscales.size() == 1 && dim > 1) {
      s.lengthscales = Eigen::VectorXd::Constant(dim, s.lengthscales[0]);
    }
    s = s.with_noise_floor();
    s.validate(dim);
  }
  return KernelDictionary(std::move(out));
}

void to_json(nlohmann::json& j, const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::SqExp: j["family"] = "sqexp"; break;
    case KernelFamily::SqExpArd: j["family"] = "sqexp_ard"; break;
    case KernelFamily::Matern:
      j["family"] = "matern";
      j["nu"] = spec.nu;
      break;
  }
  j["lengthscales"] = std::vector<double>(spec.lengthscales.data(),
                                          spec.lengthscales.data() + spec.lengthscales.size());
  j["amplitude"] = spec.amplitude;
  j["noise_var"] = spec.noise_var;
  j["learn_lengthscales"] = spec.learn_lengthscales;
}

void from_json(const nlohmann::json& j, KernelSpec& spec) {
  try {
    const std::string family = j.at("family").get<std::string>();
    spec = KernelSpec{};
    if (family == "sqexp" || family == "rbf") {
      spec.family = KernelFamily::SqExp;
    } else if (family == "sqexp_ard" || family == "rbf_ard") {
      spec.family = KernelFamily::SqExpArd;
    } else if (family == "matern") {
      spec.family = KernelFamily::Matern;
      spec.nu = j.value("nu", 2.5);
    } else {
      throw UsageError("unknown kernel family '" + family + "'");
    }
    const auto& ls = j.at("lengthscales");
    if (ls.is_number()) {
      spec.lengthscales = Eigen::VectorXd::Constant(1, ls.get<double>());
    } else {
      const auto v = ls.get<std::vector<double>>();
      spec.lengthscales = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    spec.amplitude = j.value("amplitude", 1.0);
    spec.noise_var = j.value("noise_var", 1e-2);
    spec.learn_lengthscales = j.value("learn_lengthscales", true);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed kernel entry: ") + e.what());
  }
  spec.validate();
}

}  // namespace egpbo
