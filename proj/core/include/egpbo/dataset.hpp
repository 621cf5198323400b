#pragma once

#include <cstddef>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace egpbo {

/// Axis-aligned search box [lo, hi].
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);
  static Box unit(Eigen::Index dim);
  static Box cube(Eigen::Index dim, double lo, double hi);

  [[nodiscard]] Eigen::Index dim() const noexcept { return lo.size(); }
  [[nodiscard]] Eigen::VectorXd width() const { return hi - lo; }
  [[nodiscard]] bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
};

struct Observation {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// Acquired (x, y) pairs. Keeps the raw targets and a standardized copy
/// y = (y_raw - shift) / scale; the shift and scale are recomputed only by
/// restandardize(), so they stay frozen between model refits.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Box box);

  /// Appends one pair; x must lie in the box and y_raw must be finite.
  void append(const Eigen::VectorXd& x, double y_raw);

  /// Resets shift/scale to the mean/std of all raw targets (scale 1 when
  /// the spread is degenerate) and recomputes the standardized column.
  void restandardize();

  [[nodiscard]] double standardize(double y_raw) const noexcept { return (y_raw - shift_) / scale_; }
  [[nodiscard]] double destandardize(double y) const noexcept { return y * scale_ + shift_; }

  [[nodiscard]] const Eigen::MatrixXd& X() const noexcept { return X_; }
  [[nodiscard]] const Eigen::VectorXd& y() const noexcept { return y_; }
  [[nodiscard]] const Eigen::VectorXd& y_raw() const noexcept { return y_raw_; }
  [[nodiscard]] const Box& box() const noexcept { return box_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(X_.rows()); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return box_.dim(); }
  [[nodiscard]] double shift() const noexcept { return shift_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }

  [[nodiscard]] nlohmann::json to_json() const;
  static Dataset from_json(const nlohmann::json& j);

 private:
  Box box_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd y_raw_;
  double shift_ = 0.0;
  double scale_ = 1.0;
};

}  // namespace egpbo
