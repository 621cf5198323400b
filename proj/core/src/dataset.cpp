#include "egpbo/dataset.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "egpbo/errors.hpp"

namespace egpbo {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() < 1) throw ContractError("box bounds have mismatched sizes");
  if ((hi.array() <= lo.array()).any()) throw ContractError("box must have hi > lo in every dimension");
}

Box Box::unit(Eigen::Index dim) { return cube(dim, 0.0, 1.0); }

Box Box::cube(Eigen::Index dim, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi));
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  const Eigen::ArrayXd slack = tol * width().array();
  return (x.array() >= lo.array() - slack).all() && (x.array() <= hi.array() + slack).all();
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

Eigen::VectorXd Box::to_unit(const Eigen::VectorXd& x) const {
  return ((x - lo).array() / width().array()).matrix();
}

Eigen::VectorXd Box::from_unit(const Eigen::VectorXd& u) const {
  return clamp(lo + (u.array() * width().array()).matrix());
}

Dataset::Dataset(Box box) : box_(std::move(box)), X_(0, box_.dim()), y_(0), y_raw_(0) {}

void Dataset::append(const Eigen::VectorXd& x, double y_raw) {
  if (!box_.contains(x)) throw ContractError("observation outside the search box");
  if (!std::isfinite(y_raw)) throw ContractError("observation value is not finite");
  const Eigen::Index t = X_.rows();
  X_.conservativeResize(t + 1, Eigen::NoChange);
  X_.row(t) = x.transpose();
  y_raw_.conservativeResize(t + 1);
  y_raw_[t] = y_raw;
  y_.conservativeResize(t + 1);
  y_[t] = standardize(y_raw);
}

void Dataset::restandardize() {
  if (y_raw_.size() == 0) {
    shift_ = 0.0;
    scale_ = 1.0;
    return;
  }
  shift_ = y_raw_.mean();
  const double var = (y_raw_.array() - shift_).square().mean();
  const double sd = std::sqrt(var);
  scale_ = (sd > 1e-12 * std::max(1.0, std::abs(shift_)) && std::isfinite(sd)) ? sd : 1.0;
  y_ = ((y_raw_.array() - shift_) / scale_).matrix();
}

nlohmann::json Dataset::to_json() const {
  nlohmann::json j;
  j["box_lo"] = std::vector<double>(box_.lo.data(), box_.lo.data() + box_.dim());
  j["box_hi"] = std::vector<double>(box_.hi.data(), box_.hi.data() + box_.dim());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    const Eigen::VectorXd r = X_.row(i).transpose();
    rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  j["X"] = rows;
  j["y_raw"] = std::vector<double>(y_raw_.data(), y_raw_.data() + y_raw_.size());
  j["shift"] = shift_;
  j["scale"] = scale_;
  return j;
}

Dataset Dataset::from_json(const nlohmann::json& j) {
  const auto lo = j.at("box_lo").get<std::vector<double>>();
  const auto hi = j.at("box_hi").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(lo.size());
  Dataset d(Box(Eigen::Map<const Eigen::VectorXd>(lo.data(), n),
                Eigen::Map<const Eigen::VectorXd>(hi.data(), n)));
  d.shift_ = j.at("shift").get<double>();
  d.scale_ = j.at("scale").get<double>();
  const auto y_raw = j.at("y_raw").get<std::vector<double>>();
  const auto& rows = j.at("X");
  for (std::size_t i = 0; i < y_raw.size(); ++i) {
    const auto r = rows.at(i).get<std::vector<double>>();
    d.append(Eigen::Map<const Eigen::VectorXd>(r.data(), n), y_raw[i]);
  }
  return d;
}

}  // namespace egpbo
