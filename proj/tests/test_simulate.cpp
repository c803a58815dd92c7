#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "scents/numerics.hpp"
#include "scents/simulate.hpp"

using namespace scents;

TEST_CASE("generation is deterministic in the seed") {
  const DgpConfig g = DgpConfig::reference(200, 42);
  const Dataset a = generate(g);
  const Dataset b = generate(g);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  const Dataset c = generate(DgpConfig::reference(200, 43));
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("config validation") {
  DgpConfig g = DgpConfig::reference(100, 1);
  g.rho = 1.0;
  CHECK_THROWS_AS(generate(g), std::invalid_argument);
  g = DgpConfig::reference(100, 1);
  g.sigma_eps = 0.0;
  CHECK_THROWS_AS(generate(g), std::invalid_argument);
  g = DgpConfig::reference(100, 1);
  g.beta0.resize(3);
  CHECK_THROWS_AS(generate(g), std::invalid_argument);
}

TEST_CASE("overlap shares the leading design columns") {
  DgpConfig g = DgpConfig::reference(50, 2);
  const Dataset d = generate(g);
  CHECK((d.X.leftCols(2) - d.Z.leftCols(2)).cwiseAbs().maxCoeff() == 0.0);
  g.overlap = false;
  const Dataset e = generate(g);
  CHECK((e.X.leftCols(2) - e.Z.leftCols(2)).cwiseAbs().maxCoeff() > 0.0);
}

// [DERIVED] eta is standard normal by construction, so the fraction with
// |q - Z gamma0| <= 1 converges to Phi(1) - Phi(-1) ~ 0.6827.
TEST_CASE("score residual matches its nominal distribution") {
  const DgpConfig g = DgpConfig::reference(20000, 3);
  const Dataset d = generate(g);
  const Eigen::VectorXd eta = d.q - d.Z * g.gamma0;
  const double frac =
      static_cast<double>((eta.cwiseAbs().array() <= 1.0).count()) / d.n();
  CHECK(frac == doctest::Approx(0.6827).epsilon(0.02));
  CHECK(std::abs(eta.mean()) <= 0.03);
}

TEST_CASE("linear confounding slope is derived from rho") {
  DgpConfig g = DgpConfig::reference(10, 1);
  g.b_kind = BKind::linear;
  // rho = 0.5 gives slope rho / sqrt(1 - rho^2) = 0.57735...
  CHECK(b_function(g, 2.0) == doctest::Approx(2.0 * 0.5773502691896258).epsilon(1e-12));
  g.linear_slope = -1.5;
  CHECK(b_function(g, 2.0) == doctest::Approx(-3.0).epsilon(1e-12));
  g.b_kind = BKind::sine;
  CHECK(b_function(g, 0.7) == doctest::Approx(std::sin(0.7)).epsilon(1e-15));
  g.b_kind = BKind::quadratic_centered;
  CHECK(b_function(g, 2.0) == doctest::Approx(3.0).epsilon(1e-15));
  g.b_kind = BKind::zero;
  CHECK(b_function(g, 2.0) == 0.0);
}

TEST_CASE("normal cdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
  CHECK(normal_cdf(-1.96) == doctest::Approx(0.0249978951482205).epsilon(1e-12));
}

TEST_CASE("ks distance separates conforming and shifted samples") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> z(4000);
  for (double& v : z) v = N(rng);
  CHECK(ks_distance(z) < 0.03);
  for (double& v : z) v += 2.0;
  CHECK(ks_distance(z) > 0.5);
}

TEST_CASE("monte carlo summary is deterministic and internally consistent") {
  DgpConfig g = DgpConfig::reference(300, 5);
  FitConfig cfg;
  const McSummary a = monte_carlo(g, cfg, 20, 1);
  const McSummary b = monte_carlo(g, cfg, 20, 4);
  CHECK(a.bias == b.bias);
  CHECK(a.sd == b.sd);
  CHECK(a.R == 20);
  CHECK(static_cast<int>(a.alphas.size()) == 20 - a.n_failed);
  CHECK(a.rmse >= std::abs(a.bias));
  CHECK(a.sd > 0.0);
  CHECK_THROWS_AS(monte_carlo(g, cfg, 10, 1), std::invalid_argument);
}
