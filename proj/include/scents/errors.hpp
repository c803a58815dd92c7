#pragma once

#include <stdexcept>
#include <string>

namespace scents {

/// Design matrix (or stacked system) is numerically singular.
class SingularDesignError : public std::runtime_error {
 public:
  explicit SingularDesignError(const std::string& msg, double cond = -1.0)
      : std::runtime_error(msg), condition_number(cond) {}
  double condition_number;
};

/// Too few observations for the requested operation.
class InsufficientDataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Truncation mask removed every observation.
class EmptySupportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Plug-in variance denominator collapsed to ~0.
class DegenerateVarianceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too many bootstrap replicates failed.
class BootstrapFailureError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace scents
