#pragma once

#include <Eigen/Dense>
#include <vector>

namespace scents {

/// Clamped cubic B-spline system on [-tau, tau] with K equispaced
/// intervals, evaluated in the scaled form sqrt(K/(2 tau)) * N_j(x).
/// There are K + 3 basis functions.
struct SplineBasis {
  double tau = 1.0;
  int K = 1;
  int degree = 3;
  std::vector<double> knots;  // length K + 2*degree + 1, clamped ends
  double scale = 1.0;         // sqrt(K / (2 tau))
  int dim = 4;                // K + 3
};

SplineBasis make_basis(double tau, int K);

/// Scaled basis vector at x; zero vector outside [-tau, tau].
Eigen::VectorXd eval_basis(const SplineBasis& basis, double x);

/// Entrywise derivative of the scaled basis; zero outside [-tau, tau].
Eigen::VectorXd eval_basis_deriv(const SplineBasis& basis, double x);

/// Row i is eval_basis(basis, xs[i]).
Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::VectorXd& xs);

/// Default interval count for a sample of size n: round(n^{1/4}) clipped
/// to [4, 50].
int default_interval_count(int n);

}  // namespace scents
