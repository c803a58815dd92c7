#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "scents/errors.hpp"
#include "scents/estimator.hpp"
#include "scents/numerics.hpp"
#include "scents/simulate.hpp"

using namespace scents;

namespace {

// 6-row fixture with p1 = p2 = 1 used by the frozen-system test.
Dataset fixture6() {
  Dataset d;
  d.y.resize(6);
  d.y << 0.5, -1.2, 0.3, 2.0, -0.7, 1.1;
  d.q.resize(6);
  d.q << 0.4, -2.0, 0.1, 1.5, -0.3, 0.9;
  d.X.resize(6, 1);
  d.X << 0.2, -1.0, 0.5, 1.3, -0.4, 0.8;
  d.Z.resize(6, 1);
  d.Z << 1.0, -0.5, 0.3, 0.7, -1.2, 0.1;
  return d;
}

}  // namespace

// [DERIVED] full stacked system frozen against an independent
// scipy.interpolate.BSpline construction (tau = 1, K = 1, gamma = 0.6,
// omega = (0.3, -0.1, 0.2, 0.05)).
TEST_CASE("frozen stacked system") {
  const Dataset d = fixture6();
  Eigen::VectorXd gamma(1), omega(4);
  gamma << 0.6;
  omega << 0.3, -0.1, 0.2, 0.05;
  const SplineBasis basis = make_basis(1.0, 1);
  const StackedSystem sys = assemble_system(d, gamma, omega, basis);

  REQUIRE(sys.n3 == 4);
  REQUIRE(sys.W.rows() == 10);
  REQUIRE(sys.W.cols() == 3);
  REQUIRE(sys.Na.cols() == 4);

  Eigen::MatrixXd Wexp(10, 3);
  Wexp << 1.0, 0.2, -2.5455844122715728e-02,
      1.0, 0.5, 2.1001071401241292e-04,
      0.0, -0.4, -1.8181836664649724e-02,
      1.0, 0.8, -9.0537952263125606e-03,
      0.0, 0.0, -1.0,
      0.0, 0.0, 0.5,
      0.0, 0.0, -0.3,
      0.0, 0.0, -0.7,
      0.0, 0.0, 1.2,
      0.0, 0.0, -0.1;
  CHECK((sys.W - Wexp).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::MatrixXd Nexp = Eigen::MatrixXd::Zero(10, 4);
  Nexp.row(0) << 1.5273506473629428e-01, 3.0547012947258850e-01, 2.0364675298172571e-01,
      4.5254833995939055e-02;
  Nexp.row(1) << 1.1134386219275855e-01, 2.8454542560371632e-01, 2.4239054773649904e-01,
      6.8826945653573793e-02;
  Nexp.row(2) << 1.7245627286358714e-02, 1.2666615903428985e-01, 3.1011369970464064e-01,
      2.5308129516125843e-01;
  Nexp.row(3) << 3.6203867196751182e-04, 1.2490334182879165e-02, 1.4363884310311048e-01,
      5.5061556522859034e-01;
  CHECK((sys.Na - Nexp).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::VectorXd rexp(10);
  rexp << 0.5, 0.3, -0.7, 1.1, -0.2, -1.7, -0.08, 1.08, 0.42, 0.84;
  CHECK((sys.resp - rexp).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("three-way split: sizes, determinism, coverage") {
  DgpConfig g = DgpConfig::reference(100, 5);
  const Dataset d = generate(g);
  FitConfig cfg;
  cfg.seed = 17;
  const auto parts = split_three(d, cfg);
  CHECK(parts[0].n() == 34);
  CHECK(parts[1].n() == 33);
  CHECK(parts[2].n() == 33);
  const auto again = split_three(d, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK((parts[k].q - again[k].q).cwiseAbs().maxCoeff() == 0.0);
  FitConfig other = cfg;
  other.seed = 18;
  const auto moved = split_three(d, other);
  CHECK((parts[0].q - moved[0].q).cwiseAbs().maxCoeff() > 0.0);
  // every row appears exactly once: compare multiset sums
  double s0 = parts[0].q.sum() + parts[1].q.sum() + parts[2].q.sum();
  CHECK(s0 == doctest::Approx(d.q.sum()).epsilon(1e-12));
}

TEST_CASE("round-robin split is order-deterministic") {
  DgpConfig g = DgpConfig::reference(30, 1);
  const Dataset d = generate(g);
  FitConfig cfg;
  cfg.split = SplitScheme::round_robin;
  const auto parts = split_three(d, cfg);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < parts[k].n(); ++i)
      CHECK(parts[k].q[i] == d.q[3 * i + k]);
}

TEST_CASE("gamma recovery on a clean linear score") {
  DgpConfig g = DgpConfig::reference(4000, 9);
  const Dataset d = generate(g);
  const Eigen::VectorXd gamma = estimate_gamma(d);
  CHECK((gamma - g.gamma0).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("duplicate instrument columns raise a named singular-design error") {
  Dataset d = fixture6();
  d.Z.conservativeResize(Eigen::NoChange, 2);
  d.Z.col(1) = d.Z.col(0);
  CHECK_THROWS_WITH_AS(estimate_gamma(d), doctest::Contains("z_"), SingularDesignError);
}

TEST_CASE("residualize: explicit and automatic truncation") {
  const Dataset d = fixture6();
  Eigen::VectorXd gamma(1);
  gamma << 0.6;
  const Residualized r = residualize(d, gamma, 1.0);
  CHECK(r.n_masked == 4);
  CHECK(r.mask == std::vector<bool>{true, false, true, false, true, true});
  CHECK(r.eta[1] == doctest::Approx(-1.7).epsilon(1e-14));

  // auto tau is the 0.9 quantile of |eta|: sorted |eta| =
  // (.08,.2,.42,.84,1.08,1.7), quantile index 4.5 -> 1.39
  const Residualized ra = residualize(d, gamma, 0.0);
  CHECK(ra.tau == doctest::Approx(1.39).epsilon(1e-12));
  CHECK(ra.n_masked == 5);

  CHECK_THROWS_AS(residualize(d, gamma, 1e-15), EmptySupportError);
}

// [DERIVED] the projected solver must agree with the joint unprojected
// least-squares fit on the structural block (Frisch-Waugh).
TEST_CASE("solve_alpha agrees with the joint regression") {
  DgpConfig g = DgpConfig::reference(600, 21);
  const Dataset d = generate(g);
  const Eigen::VectorXd gamma = estimate_gamma(d);
  const SplineBasis basis = make_basis(1.2, 5);
  const Eigen::VectorXd omega = estimate_bprime(d, gamma, basis);
  const StackedSystem sys = assemble_system(d, gamma, omega, basis);
  const AlphaSolution sol = solve_alpha(sys);

  Eigen::MatrixXd D(sys.W.rows(), sys.W.cols() + basis.dim);
  D.leftCols(sys.W.cols()) = sys.W;
  D.rightCols(basis.dim) = sys.Na;
  const Eigen::VectorXd joint = ols(D, sys.resp);
  CHECK((sol.theta - joint.head(sys.W.cols())).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(sol.alpha == sol.theta[0]);
  CHECK(sol.condition_number >= 1.0);
}

TEST_CASE("constant weights reproduce the unweighted solution") {
  DgpConfig g = DgpConfig::reference(300, 22);
  const Dataset d = generate(g);
  const Eigen::VectorXd gamma = estimate_gamma(d);
  const SplineBasis basis = make_basis(1.0, 4);
  const Eigen::VectorXd omega = estimate_bprime(d, gamma, basis);
  const StackedSystem sys = assemble_system(d, gamma, omega, basis);
  const AlphaSolution plain = solve_alpha(sys);
  const AlphaSolution wtd =
      solve_alpha(sys, Eigen::VectorXd::Constant(sys.W.rows(), 3.7));
  CHECK(std::abs(plain.alpha - wtd.alpha) <= 1e-9);
  CHECK((plain.theta - wtd.theta).cwiseAbs().maxCoeff() <= 1e-8);

  CHECK_THROWS_AS(solve_alpha(sys, Eigen::VectorXd::Zero(sys.W.rows())),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_alpha(sys, Eigen::VectorXd::Ones(2)), std::invalid_argument);
}

// Adding X delta to the outcome is absorbed exactly by the linear block:
// the nuisance spline and the treatment coordinate are untouched.
TEST_CASE("linear covariate shifts leave the estimate invariant") {
  DgpConfig g = DgpConfig::reference(900, 23);
  Dataset d = generate(g);
  FitConfig cfg;
  cfg.seed = 3;
  const FixedFit base = fit(d, cfg);
  Eigen::VectorXd delta(2);
  delta << 0.7, -1.3;
  d.y += d.X * delta;
  const FixedFit shifted = fit(d, cfg);
  CHECK(shifted.alpha_bar == doctest::Approx(base.alpha_bar).epsilon(1e-8));
  for (int r = 0; r < 3; ++r)
    CHECK(shifted.alpha_per_rotation[r] ==
          doctest::Approx(base.alpha_per_rotation[r]).epsilon(1e-8));
  CHECK(shifted.theta[1] == doctest::Approx(base.theta[1] + delta[0]).epsilon(1e-6));
  CHECK(shifted.theta[2] == doctest::Approx(base.theta[2] + delta[1]).epsilon(1e-6));
}

TEST_CASE("fit is deterministic and averages the rotations") {
  DgpConfig g = DgpConfig::reference(600, 24);
  const Dataset d = generate(g);
  FitConfig cfg;
  cfg.seed = 7;
  const FixedFit a = fit(d, cfg);
  const FixedFit b = fit(d, cfg);
  CHECK(a.alpha_bar == b.alpha_bar);
  CHECK(a.alpha_bar == doctest::Approx(a.alpha_per_rotation.mean()).epsilon(1e-14));
  CHECK(a.tau_used > 0.0);
  CHECK(a.K_used >= 4);
  CHECK(a.n_used > 0);
  CHECK(a.theta.size() == 1 + d.p1() + d.p2());
  CHECK(a.omega_tau_hat.rows() == a.theta.size());
  CHECK((a.omega_tau_hat - a.omega_tau_hat.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("estimate recovers the effect on the reference design") {
  DgpConfig g = DgpConfig::reference(2400, 31);
  const Dataset d = generate(g);
  FitConfig cfg;
  cfg.seed = 5;
  const FixedFit f = fit(d, cfg);
  CHECK(std::abs(f.alpha_bar - g.alpha0) <= 0.3);
  CHECK_FALSE(f.identification_warning);
}

TEST_CASE("weak instruments trigger the identification warning") {
  DgpConfig g = DgpConfig::reference(600, 32);
  Dataset d = generate(g);
  // destroy the score/instrument link: pure noise scores
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < d.n(); ++i) d.q[i] = N(rng);
  FitConfig cfg;
  cfg.seed = 5;
  const FixedFit f = fit(d, cfg);
  CHECK(f.identification_warning);
}

TEST_CASE("configuration errors") {
  DgpConfig g = DgpConfig::reference(60, 33);
  const Dataset d = generate(g);
  FitConfig cfg;
  cfg.K = 2;
  CHECK_THROWS_AS(fit(d, cfg), std::invalid_argument);
  cfg.K = 0;
  cfg.tau = -1.0;
  CHECK_THROWS_AS(fit(d, cfg), std::invalid_argument);

  Dataset tiny = fixture6();
  CHECK_THROWS_AS(fit(tiny, FitConfig{}), std::invalid_argument);
}
