#pragma once

#include <stdexcept>
#include <string>

namespace egpbo {

/// Thrown when a caller violates a documented precondition (dimension
/// mismatch, empty feature map, point outside the search box, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a linear-algebra step cannot be completed to the required
/// accuracy. `diagnostics()` carries the numbers that triggered it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::string diagnostics)
      : std::runtime_error(what + " [" + diagnostics + "]"),
        diagnostics_(std::move(diagnostics)) {}

  [[nodiscard]] const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

/// Bad user input at the configuration or command-line level.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace egpbo
