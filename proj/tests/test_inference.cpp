#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "scents/errors.hpp"
#include "scents/inference.hpp"
#include "scents/simulate.hpp"

using namespace scents;

namespace {

Dataset sample_data(int n, std::uint64_t seed) {
  return generate(DgpConfig::reference(n, seed));
}

}  // namespace

TEST_CASE("bootstrap input validation") {
  const Dataset d = sample_data(120, 1);
  FitConfig cfg;
  BootstrapOptions opt;
  opt.B = 40;
  CHECK_THROWS_AS(bootstrap_ci(d, cfg, opt), std::invalid_argument);
  opt.B = 60;
  opt.level = 0.4;
  CHECK_THROWS_AS(bootstrap_ci(d, cfg, opt), std::invalid_argument);
  opt.level = 1.0;
  CHECK_THROWS_AS(bootstrap_ci(d, cfg, opt), std::invalid_argument);
}

TEST_CASE("bootstrap is deterministic and threading-invariant") {
  const Dataset d = sample_data(240, 2);
  FitConfig cfg;
  cfg.seed = 9;
  BootstrapOptions opt;
  opt.B = 60;
  opt.seed = 9;
  const BootstrapResult a = bootstrap_ci(d, cfg, opt);
  const BootstrapResult b = bootstrap_ci(d, cfg, opt);
  CHECK(a.boot_mean == b.boot_mean);
  CHECK(a.ci.first == b.ci.first);
  opt.threads = 4;
  const BootstrapResult c = bootstrap_ci(d, cfg, opt);
  CHECK(a.boot_mean == c.boot_mean);
  CHECK(a.ci.second == c.ci.second);
}

TEST_CASE("point estimate matches a direct fit") {
  const Dataset d = sample_data(240, 3);
  FitConfig cfg;
  cfg.seed = 4;
  BootstrapOptions opt;
  opt.B = 50;
  opt.seed = 4;
  const BootstrapResult r = bootstrap_ci(d, cfg, opt);
  CHECK(r.point == fit(d, cfg).alpha_bar);
  CHECK(r.boot_se > 0.0);
  CHECK(r.ci.first < r.ci.second);
  CHECK(r.B == 50);
  CHECK(r.n_failed * 20 <= r.B);
}

TEST_CASE("higher confidence level widens the interval") {
  const Dataset d = sample_data(300, 5);
  FitConfig cfg;
  cfg.seed = 6;
  BootstrapOptions opt;
  opt.B = 80;
  opt.seed = 6;
  opt.level = 0.9;
  const BootstrapResult narrow = bootstrap_ci(d, cfg, opt);
  opt.level = 0.99;
  const BootstrapResult wide = bootstrap_ci(d, cfg, opt);
  // same replicate draws, nested percentile bands
  CHECK(wide.ci.first <= narrow.ci.first);
  CHECK(wide.ci.second >= narrow.ci.second);
}

TEST_CASE("interval covers the truth on an easy design") {
  const Dataset d = sample_data(900, 7);
  FitConfig cfg;
  cfg.seed = 8;
  BootstrapOptions opt;
  opt.B = 120;
  opt.seed = 8;
  opt.threads = 4;
  const BootstrapResult r = bootstrap_ci(d, cfg, opt);
  CHECK(r.ci.first < 1.0);
  CHECK(r.ci.second > 1.0);
}
