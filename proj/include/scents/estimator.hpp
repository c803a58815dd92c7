#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "scents/dataset.hpp"
#include "scents/spline.hpp"

namespace scents {

enum class SplitScheme { shuffle, round_robin };

struct FitConfig {
  double tau = 0.0;  // <= 0 means auto: 0.9 quantile of |eta_hat|
  int K = 0;         // <= 0 means auto: round(n_masked^{1/4}) in [4, 50]
  std::uint64_t seed = 0;
  bool wls = false;
  SplitScheme split = SplitScheme::shuffle;
};

struct FixedFit {
  double alpha_bar = 0.0;
  Eigen::Vector3d alpha_per_rotation = Eigen::Vector3d::Zero();
  Eigen::VectorXd theta;      // from the last rotation
  Eigen::VectorXd gamma_hat;  // from the last rotation
  Eigen::MatrixXd omega_tau_hat;
  int n_used = 0;  // |eta_hat| <= tau count in the last alpha part
  bool identification_warning = false;
  double condition_number = 0.0;
  double tau_used = 0.0;  // from the last rotation
  int K_used = 0;
};

struct Residualized {
  Eigen::VectorXd eta;
  std::vector<bool> mask;
  double tau = 0.0;
  int n_masked = 0;
};

struct StackedSystem {
  Eigen::MatrixXd W;    // (n3 + n_part) x (1 + p1 + p2)
  Eigen::MatrixXd Na;   // same rows x dim, zero lower block
  Eigen::VectorXd resp;
  int n3 = 0;
};

struct AlphaSolution {
  Eigen::VectorXd theta;
  double alpha = 0.0;
  double condition_number = 0.0;
};

std::array<Dataset, 3> split_three(const Dataset& data, const FitConfig& cfg);

/// OLS of Q on Z; throws SingularDesignError naming degenerate columns.
Eigen::VectorXd estimate_gamma(const Dataset& d1);

/// eta_hat = Q - Z gamma_hat with mask |eta_hat| <= tau.  tau <= 0
/// selects the 0.9 empirical quantile of |eta_hat|.
Residualized residualize(const Dataset& d, const Eigen::VectorXd& gamma_hat, double tau);

/// Spline coefficients omega_hat such that b'(x) ~ eval_basis_deriv(x) . omega_hat.
Eigen::VectorXd estimate_bprime(const Dataset& d2, const Eigen::VectorXd& gamma_hat,
                                const SplineBasis& basis);

StackedSystem assemble_system(const Dataset& d3, const Eigen::VectorXd& gamma_hat,
                              const Eigen::VectorXd& omega_hat, const SplineBasis& basis);

AlphaSolution solve_alpha(const StackedSystem& sys);

/// Weighted variant; `weights` are per-row variances used to whiten the
/// stacked system.  Constant weights reproduce the unweighted solution.
AlphaSolution solve_alpha(const StackedSystem& sys, const Eigen::VectorXd& weights);

FixedFit fit(const Dataset& data, const FitConfig& cfg);
FixedFit fit_wls(const Dataset& data, const FitConfig& cfg);

}  // namespace scents
