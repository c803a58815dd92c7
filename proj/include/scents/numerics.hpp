#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace scents {

struct LassoConfig {
  double lambda = 0.0;
  int max_iters = 10000;
  double tol = 1e-8;          // max coefficient change per sweep
  bool standardize = false;   // scale columns to unit empirical norm internally
};

struct LassoResult {
  Eigen::VectorXd coef;
  bool converged = false;
  int iters = 0;
  double kkt = 0.0;
  std::vector<double> objective_trace;  // one entry per sweep
};

/// Minimum-norm least-squares solution of X theta ~ y.  Rank-deficient
/// systems are handled via complete orthogonal decomposition with a
/// relative rank threshold of 1e-10.
Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// A - M (M'M)^- M' A, the residual of A after projecting onto col(M).
Eigen::MatrixXd project_out(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M);

/// Cyclic coordinate descent for (1/2n)||y - X theta||^2 + lambda ||theta||_1.
LassoResult lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoConfig& cfg);

/// Warm-started solve along a descending lambda path; used by CV.
LassoResult lasso_warm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoConfig& cfg,
                       const Eigen::VectorXd& start);

/// Maximum violation of the subgradient optimality conditions; 0 iff
/// theta is exactly optimal.
double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& theta, double lambda);

/// Smallest lambda for which the all-zero vector is optimal.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// k-fold cross-validated lambda over a descending log-spaced path.
/// Ties between folds break toward the larger lambda.
double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        int folds = 5, int path_len = 15, int max_iters = 10000);

/// lambda = c * sigma_hat * sqrt(log p / n) with sigma_hat from a
/// preliminary ridge fit.
double select_lambda_theory(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double c = 1.1);

}  // namespace scents
