#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace atomint {

// Input outside the domain of a physical formula (v <= 0, resonant light, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Diffraction order without a closed-form coefficient.
class UnsupportedOrder : public std::invalid_argument {
 public:
  explicit UnsupportedOrder(int p)
      : std::invalid_argument("unsupported diffraction order p=" + std::to_string(p)),
        order(p) {}
  int order;
};

// Truncated momentum basis did not converge up to the allowed size.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, int last_n, double last_change)
      : std::runtime_error(what), truncation(last_n), change(last_change) {}
  int truncation;
  double change;
};

// Fit whose data cannot constrain the requested parameters.
class IllConditionedFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative solver gave up; carries the last residual for diagnostics.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), last_residual(residual) {}
  double last_residual;
};

// Scenario or CSV content failed validation; `path` names the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field_path, const std::string& what)
      : std::runtime_error(field_path + ": " + what), path(std::move(field_path)) {}
  std::string path;
};

// Non-fatal findings attached to results.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
  [[nodiscard]] bool empty() const noexcept { return warnings.empty(); }
};

}  // namespace atomint
