#pragma once

#include <cstdint>

#include "scents/dataset.hpp"
#include "scents/estimator.hpp"

namespace scents {

enum class BKind { zero, linear, sine, quadratic_centered };

struct DgpConfig {
  int n = 900;
  int p1 = 2, p2 = 2;
  double alpha0 = 1.0;
  Eigen::VectorXd beta0;   // length p1
  Eigen::VectorXd gamma0;  // length p2
  BKind b_kind = BKind::sine;
  double linear_slope = 0.0;  // 0 means derive from rho (linear kind only)
  double rho = 0.5;           // corr(nu, eta) target for the linear kind
  double sigma_eps = 1.0;
  bool heteroskedastic = false;  // sd profile 1 + eta^2 when true
  bool overlap = true;           // X and Z share the first min(p1,p2) columns
  int s_beta = 0, s_gamma = 0;   // sparsities for high-dimensional mode
  std::uint64_t seed = 0;

  void check() const;

  /// p1 = p2 = 2, overlap, alpha0 = 1, beta0 = (1,-1), gamma0 = (1,0.5),
  /// b = sine, rho = 0.5, sigma_eps = 1.
  static DgpConfig reference(int n, std::uint64_t seed);

  /// n = 300, p1 = p2 = 500, s_beta = s_gamma = 3, alpha0 = 1.
  static DgpConfig reference_hd(std::uint64_t seed);
};

Dataset generate(const DgpConfig& cfg);

/// E[nu | eta] used by the generator; exposed for oracle checks.
double b_function(const DgpConfig& cfg, double eta);

struct McSummary {
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double ks_stat = 0.0;    // studentized alpha_bar vs standard normal
  double naive_bias = 0.0; // plain OLS of Y on (1, S, X)
  int n_failed = 0;
  int R = 0;
  std::vector<double> alphas;  // per-replicate alpha_bar
};

McSummary monte_carlo(const DgpConfig& dgp, const FitConfig& cfg, int R, int threads = 1);

/// Standard normal CDF.
double normal_cdf(double x);

/// Kolmogorov-Smirnov distance of a sample against the standard normal.
double ks_distance(std::vector<double> z);

}  // namespace scents
