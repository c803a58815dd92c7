#include "scents/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace scents {

namespace {
constexpr double kRankThreshold = 1e-10;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& theta, double lambda) {
  const double n = static_cast<double>(X.rows());
  return (y - X * theta).squaredNorm() / (2.0 * n) + lambda * theta.lpNorm<1>();
}
}  // namespace

Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  cod.setThreshold(kRankThreshold);
  return cod.solve(y);
}

Eigen::MatrixXd project_out(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M) {
  if (M.cols() == 0 || M.isZero(0.0)) return A;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  cod.setThreshold(kRankThreshold);
  return A - M * cod.solve(A);
}

LassoResult lasso_warm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoConfig& cfg,
                       const Eigen::VectorXd& start) {
  const Eigen::Index n = X.rows(), p = X.cols();
  LassoResult res;

  Eigen::MatrixXd Xw = X;
  Eigen::VectorXd colscale = Eigen::VectorXd::Ones(p);
  if (cfg.standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = std::sqrt(X.col(j).squaredNorm() / n);
      if (s > 0) {
        colscale[j] = s;
        Xw.col(j) /= s;
      }
    }
  }

  Eigen::VectorXd theta = start.cwiseProduct(colscale);
  Eigen::VectorXd colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) colsq[j] = Xw.col(j).squaredNorm() / n;
  Eigen::VectorXd r = y - Xw * theta;

  const double lam = cfg.lambda;
  int sweep = 0;
  for (; sweep < cfg.max_iters; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (colsq[j] <= 0) {
        theta[j] = 0.0;
        continue;
      }
      const double old = theta[j];
      const double rho = Xw.col(j).dot(r) / n + colsq[j] * old;
      const double next = soft_threshold(rho, lam) / colsq[j];
      if (next != old) {
        r += Xw.col(j) * (old - next);
        theta[j] = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    res.objective_trace.push_back(r.squaredNorm() / (2.0 * n) + lam * theta.lpNorm<1>());
    if (max_change < cfg.tol) {
      res.converged = true;
      ++sweep;
      break;
    }
  }
  res.iters = sweep;
  res.coef = theta.cwiseQuotient(colscale);
  res.kkt = kkt_residual(Xw, y, theta, lam);
  return res;
}

LassoResult lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoConfig& cfg) {
  return lasso_warm(X, y, cfg, Eigen::VectorXd::Zero(X.cols()));
}

double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& theta, double lambda) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd g = X.transpose() * (y - X * theta) / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double v;
    if (theta[j] > 0)
      v = std::abs(g[j] - lambda);
    else if (theta[j] < 0)
      v = std::abs(g[j] + lambda);
    else
      v = std::max(std::abs(g[j]) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(X.rows());
  return (X.transpose() * y).cwiseAbs().maxCoeff() / n;
}

double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        int folds, int path_len, int max_iters) {
  const Eigen::Index n = X.rows();
  folds = std::min<int>(folds, static_cast<int>(n));

  std::vector<int> fold_of(n);
  for (Eigen::Index i = 0; i < n; ++i) fold_of[i] = static_cast<int>(i % folds);
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(fold_of[i], fold_of[j]);
  }

  const double lmax = std::max(lasso_lambda_max(X, y), 1e-12);
  std::vector<double> path(path_len);
  for (int k = 0; k < path_len; ++k)
    path[k] = lmax * std::pow(1e-3, static_cast<double>(k) / (path_len - 1));

  std::vector<double> cv_err(path_len, 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
    Eigen::MatrixXd Xtr(tr.size(), X.cols()), Xte(te.size(), X.cols());
    Eigen::VectorXd ytr(tr.size()), yte(te.size());
    for (size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(i) = X.row(tr[i]);
      ytr[i] = y[tr[i]];
    }
    for (size_t i = 0; i < te.size(); ++i) {
      Xte.row(i) = X.row(te[i]);
      yte[i] = y[te[i]];
    }
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
    for (int k = 0; k < path_len; ++k) {
      LassoConfig cfg;
      cfg.lambda = path[k];
      cfg.max_iters = max_iters;
      cfg.tol = 1e-7;
      const LassoResult r = lasso_warm(Xtr, ytr, cfg, warm);
      warm = r.coef;
      cv_err[k] += (yte - Xte * r.coef).squaredNorm() / static_cast<double>(n);
    }
  }

  // path is descending, so the first minimum is the largest such lambda
  int best = 0;
  for (int k = 1; k < path_len; ++k)
    if (cv_err[k] < cv_err[best]) best = k;
  return path[best];
}

double select_lambda_theory(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double c) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const double rate = std::sqrt(std::log(std::max<double>(p, 2.0)) / n);
  // iterative plug-in for the noise scale: start from sd(y), refit, and
  // correct the residual variance by the active-set degrees of freedom.
  // A ridge pilot is useless here: with p >> n it interpolates and the
  // residual scale collapses to zero.
  double sigma = std::sqrt((y.array() - y.mean()).square().sum() /
                           std::max<Eigen::Index>(n - 1, 1));
  double lambda = std::max(c * sigma * rate, 1e-12);
  for (int it = 0; it < 3; ++it) {
    LassoConfig cfg;
    cfg.lambda = lambda;
    const LassoResult r = lasso(X, y, cfg);
    Eigen::Index active = 0;
    for (Eigen::Index j = 0; j < p; ++j) active += r.coef[j] != 0.0;
    const auto dof = std::max<Eigen::Index>(n - active, 1);
    sigma = std::sqrt((y - X * r.coef).squaredNorm() / dof);
    lambda = std::max(c * sigma * rate, 1e-12);
  }
  return lambda;
}

}  // namespace scents
