#pragma once

#include <cstdint>
#include <utility>

#include "scents/dataset.hpp"
#include "scents/estimator.hpp"
#include "scents/numerics.hpp"
#include "scents/spline.hpp"

namespace scents {

enum class LambdaMode { cv, theory };

struct HdConfig {
  double tau = 0.0;  // <= 0 means auto (0.9 quantile of |eta_hat|)
  int K = 0;         // <= 0 means auto (rate rule from active-set sizes)
  std::uint64_t seed = 0;
  LambdaMode lambda_mode = LambdaMode::cv;
  SplitScheme split = SplitScheme::shuffle;
  int cv_folds = 5;
  int max_iters = 10000;
};

struct HighDimFit {
  Eigen::VectorXd gamma_hat;
  Eigen::VectorXd omega_b_hat;
  Eigen::VectorXd theta_S;  // p1 + p2
  Eigen::VectorXd theta_Y;  // p1 + p2
  double alpha_hat = 0.0;
  double sigma1_hat = 0.0;
  double sigma2_hat = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  double lambda = 0.0;   // first-stage gamma LASSO
  double lambda0 = 0.0;  // Y-regression
  double lambda1 = 0.0;  // S-regression
  double tau_used = 0.0;
  int K_used = 0;
  int n3 = 0;
};

struct HdLassoFit {
  Eigen::VectorXd coef;
  double lambda = 0.0;
  int active = 0;  // active-set size of the underlying LASSO solve
};

HdLassoFit estimate_gamma_hd(const Dataset& d1, const HdConfig& cfg);

HdLassoFit estimate_bprime_hd(const Dataset& d2, const Eigen::VectorXd& gamma_hat,
                              const SplineBasis& basis, const HdConfig& cfg);

HighDimFit fit_hd(const Dataset& data, const HdConfig& cfg);

}  // namespace scents
