#pragma once

#include <Eigen/Dense>
#include <vector>

namespace scents {

/// One observed sample (Y, Q, X, Z).  The treatment indicator
/// S = 1{Q >= 0} is derived, ties treated.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd q;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;

  /// Set when q has been centered and the indicator must be kept from
  /// the original scores.
  Eigen::VectorXd treatment;

  int n() const { return static_cast<int>(y.size()); }
  int p1() const { return static_cast<int>(X.cols()); }
  int p2() const { return static_cast<int>(Z.cols()); }

  Eigen::VectorXd s() const {
    if (treatment.size() == y.size() && treatment.size() > 0) return treatment;
    return (q.array() >= 0.0).cast<double>().matrix();
  }

  /// Throws std::invalid_argument on shape mismatch, n < 9, or
  /// non-finite entries.
  void validate() const;

  Dataset rows(const std::vector<int>& idx) const;
};

}  // namespace scents
