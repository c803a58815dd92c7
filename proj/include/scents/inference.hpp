#pragma once

#include <cstdint>
#include <utility>

#include "scents/dataset.hpp"
#include "scents/estimator.hpp"
#include "scents/simulate.hpp"

namespace scents {

struct BootstrapResult {
  double point = 0.0;
  double boot_mean = 0.0;
  double boot_se = 0.0;
  std::pair<double, double> ci{0.0, 0.0};
  int B = 0;
  double level = 0.0;
  int n_failed = 0;
};

struct BootstrapOptions {
  int B = 500;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
  bool refresh_split = true;  // re-randomize the 3-way split per replicate
};

/// Efron (pairs) bootstrap: resample rows with replacement, refit, and
/// take percentile quantiles of the replicates.
BootstrapResult bootstrap_ci(const Dataset& data, const FitConfig& cfg,
                             const BootstrapOptions& opt);

/// Fraction of R simulated datasets whose bootstrap CI covers alpha0.
double coverage_check(const DgpConfig& dgp, const FitConfig& cfg, int R,
                      const BootstrapOptions& opt);

}  // namespace scents
