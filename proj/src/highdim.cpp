#include "scents/highdim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "scents/errors.hpp"

namespace scents {

namespace {

double choose_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const HdConfig& cfg,
                     std::uint64_t sub_seed) {
  if (cfg.lambda_mode == LambdaMode::theory) return select_lambda_theory(X, y);
  return select_lambda_cv(X, y, cfg.seed * 0x9E3779B97F4A7C15ULL + sub_seed, cfg.cv_folds, 15,
                          cfg.max_iters);
}

Eigen::VectorXd run_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          int max_iters) {
  LassoConfig lc;
  lc.lambda = lambda;
  lc.max_iters = max_iters;
  lc.tol = 1e-8;
  return lasso(X, y, lc).coef;
}

// Cross-validation for regressions that partial out the spline block.
// Projecting the whole sample first would leak the held-out rows into
// the training rows (each projected row mixes all rows), which lets an
// interpolating fit look good out-of-fold and drives lambda to zero.
// Instead the spline is partialled out within each fold separately.
double cv_lambda_projected(const Eigen::VectorXd& y, const Eigen::MatrixXd& W,
                           const Eigen::VectorXd& eta, const SplineBasis& basis,
                           const HdConfig& cfg, std::uint64_t sub_seed, bool one_se) {
  const Eigen::Index n = y.size();
  const int folds = std::min<int>(cfg.cv_folds, static_cast<int>(n));
  const int path_len = 15;

  // fall back to plain CV on globally projected data when the folds are
  // too small to support their own projection
  if (n / folds <= basis.dim + 2) {
    const Eigen::MatrixXd N = design_matrix(basis, eta);
    return select_lambda_cv(project_out(W, N), project_out(y, N),
                            cfg.seed * 0x9E3779B97F4A7C15ULL + sub_seed, folds, path_len,
                            cfg.max_iters);
  }

  std::vector<int> fold_of(n);
  for (Eigen::Index i = 0; i < n; ++i) fold_of[i] = static_cast<int>(i % folds);
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + sub_seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(fold_of[i], fold_of[j]);
  }

  const Eigen::MatrixXd Nfull = design_matrix(basis, eta);
  const double lmax =
      std::max(lasso_lambda_max(project_out(W, Nfull), project_out(y, Nfull)), 1e-12);
  std::vector<double> path(path_len);
  for (int k = 0; k < path_len; ++k)
    path[k] = lmax * std::pow(1e-3, static_cast<double>(k) / (path_len - 1));

  Eigen::MatrixXd fold_err(folds, path_len);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
    Eigen::MatrixXd Wtr(tr.size(), W.cols()), Wte(te.size(), W.cols());
    Eigen::VectorXd ytr(tr.size()), yte(te.size()), etr(tr.size()), ete(te.size());
    for (size_t i = 0; i < tr.size(); ++i) {
      Wtr.row(i) = W.row(tr[i]);
      ytr[i] = y[tr[i]];
      etr[i] = eta[tr[i]];
    }
    for (size_t i = 0; i < te.size(); ++i) {
      Wte.row(i) = W.row(te[i]);
      yte[i] = y[te[i]];
      ete[i] = eta[te[i]];
    }
    const Eigen::MatrixXd Ntr = design_matrix(basis, etr);
    const Eigen::MatrixXd Nte = design_matrix(basis, ete);
    const Eigen::MatrixXd Wtr_p = project_out(Wtr, Ntr);
    const Eigen::VectorXd ytr_p = project_out(ytr, Ntr);
    const Eigen::MatrixXd Wte_p = project_out(Wte, Nte);
    const Eigen::VectorXd yte_p = project_out(yte, Nte);

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(W.cols());
    for (int k = 0; k < path_len; ++k) {
      LassoConfig lc;
      lc.lambda = path[k];
      lc.max_iters = cfg.max_iters;
      lc.tol = 1e-7;
      const LassoResult r = lasso_warm(Wtr_p, ytr_p, lc, warm);
      warm = r.coef;
      fold_err(f, k) =
          (yte_p - Wte_p * r.coef).squaredNorm() / static_cast<double>(te.size());
    }
  }

  const Eigen::VectorXd mean_err = fold_err.colwise().mean();
  int best = 0;  // descending path: first minimum is the largest lambda
  for (int k = 1; k < path_len; ++k)
    if (mean_err[k] < mean_err[best]) best = k;
  if (!one_se) return path[best];
  // one-standard-error rule: with so few rows per fold the error curve is
  // flat and noisy near its minimum, and the raw minimizer occasionally
  // lands at the path bottom where the fit saturates; take the largest
  // lambda whose error is within one SE of the minimum.
  const double se = std::sqrt((fold_err.col(best).array() - mean_err[best]).square().sum() /
                              (folds * std::max(folds - 1, 1)));
  int pick = best;
  for (int k = 0; k < best; ++k)
    if (mean_err[k] <= mean_err[best] + se) {
      pick = k;
      break;
    }
  return path[pick];
}

// lambda for a regression of y on W after partialling out the spline.
double choose_lambda_projected(const Eigen::VectorXd& y, const Eigen::MatrixXd& W,
                               const Eigen::VectorXd& eta, const SplineBasis& basis,
                               const HdConfig& cfg, std::uint64_t sub_seed, bool one_se = true) {
  if (cfg.lambda_mode == LambdaMode::theory) {
    const Eigen::MatrixXd N = design_matrix(basis, eta);
    return select_lambda_theory(project_out(W, N), project_out(y, N));
  }
  return cv_lambda_projected(y, W, eta, basis, cfg, sub_seed, one_se);
}

Dataset center_with(const Dataset& d, const Eigen::RowVectorXd& muZ, double muQ) {
  Dataset c = d;
  c.treatment = d.s();
  c.Z.rowwise() -= muZ;
  c.q.array() -= muQ;
  c.X.rowwise() -= Eigen::RowVectorXd(d.X.colwise().mean());
  return c;
}

int active_set_size(const Eigen::VectorXd& v) {
  int s = 0;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v[j] != 0.0) ++s;
  return std::max(s, 1);
}

// Least-squares refit on the LASSO's selected support.  The raw LASSO
// coefficients carry an O(lambda) shrinkage bias per active coordinate;
// downstream that bias enters eta_hat and dominates the estimator's
// error, so the selected model is refit without the penalty.
Eigen::VectorXd refit_on_support(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& coef) {
  std::vector<Eigen::Index> act;
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    if (coef[j] != 0.0) act.push_back(j);
  if (act.empty() || static_cast<Eigen::Index>(act.size()) >= X.rows()) return coef;
  Eigen::MatrixXd Xa(X.rows(), act.size());
  for (size_t k = 0; k < act.size(); ++k) Xa.col(k) = X.col(act[k]);
  const Eigen::VectorXd ba = ols(Xa, y);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coef.size());
  for (size_t k = 0; k < act.size(); ++k) out[act[k]] = ba[k];
  return out;
}

// K from the rate rule (n / (s_b^2 s_g log p))^{1/(2v+1)} with v = 3.
int rate_interval_count(int n, int s_beta, int s_gamma, int p) {
  const double logp = std::log(std::max(p, 2));
  const double base = n / std::max(double(s_beta) * s_beta * s_gamma * logp, 1e-12);
  const int k = static_cast<int>(std::lround(std::pow(std::max(base, 1.0), 1.0 / 7.0)));
  return std::clamp(k, 4, 50);
}

double abs_quantile_09(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  std::vector<double> v;
  v.reserve(a.size() + b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) v.push_back(std::abs(a[i]));
  for (Eigen::Index i = 0; i < b.size(); ++i) v.push_back(std::abs(b[i]));
  std::sort(v.begin(), v.end());
  const double pos = 0.9 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

HdLassoFit estimate_gamma_hd(const Dataset& d1, const HdConfig& cfg) {
  Eigen::MatrixXd Zc = d1.Z.rowwise() - Eigen::RowVectorXd(d1.Z.colwise().mean());
  Eigen::VectorXd qc = d1.q.array() - d1.q.mean();
  HdLassoFit out;
  out.lambda = choose_lambda(Zc, qc, cfg, 1);
  out.coef = refit_on_support(Zc, qc, run_lasso(Zc, qc, out.lambda, cfg.max_iters));
  out.active = active_set_size(out.coef);
  return out;
}

HdLassoFit estimate_bprime_hd(const Dataset& d2, const Eigen::VectorXd& gamma_hat,
                              const SplineBasis& basis, const HdConfig& cfg) {
  const Residualized res = residualize(d2, gamma_hat, basis.tau);
  if (res.n_masked <= basis.dim)
    throw InsufficientDataError("estimate_bprime_hd: masked sample too small");

  std::vector<int> keep;
  for (int i = 0; i < d2.n(); ++i)
    if (res.mask[i]) keep.push_back(i);
  const Dataset dm = d2.rows(keep);
  Eigen::VectorXd eta_m(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) eta_m[i] = res.eta[keep[i]];

  // the treatment column joins the partialled design (as in the
  // fixed-dimension stage): E[S | eta] varies with eta, so leaving S in
  // the outcome would fold alpha * dE[S|eta]/deta into b-prime
  Eigen::MatrixXd A(dm.n(), 1 + dm.p1());
  A.col(0) = dm.s();
  A.rightCols(dm.p1()) = dm.X;

  const Eigen::MatrixXd N = design_matrix(basis, eta_m);
  const Eigen::MatrixXd Ap = project_out(A, N);
  const Eigen::VectorXd yp = project_out(dm.y, N);

  HdLassoFit out;
  out.lambda = choose_lambda_projected(dm.y, A, eta_m, basis, cfg, 2);
  const Eigen::VectorXd beta =
      refit_on_support(Ap, yp, run_lasso(Ap, yp, out.lambda, cfg.max_iters));
  out.active = active_set_size(beta);
  out.coef = ols(N, dm.y - A * beta);
  return out;
}

HighDimFit fit_hd(const Dataset& data, const HdConfig& cfg) {
  data.validate();
  FitConfig split_cfg;
  split_cfg.seed = cfg.seed;
  split_cfg.split = cfg.split;
  const auto parts = split_three(data, split_cfg);
  const Dataset& d1 = parts[0];

  HighDimFit out;
  const HdLassoFit gm = estimate_gamma_hd(d1, cfg);
  out.gamma_hat = gm.coef;
  out.lambda = gm.lambda;

  const Eigen::RowVectorXd muZ = d1.Z.colwise().mean();
  const double muQ = d1.q.mean();
  const Dataset d2 = center_with(parts[1], muZ, muQ);
  const Dataset d3 = center_with(parts[2], muZ, muQ);

  double tau = cfg.tau;
  if (tau <= 0.0) {
    tau = abs_quantile_09(d2.q - d2.Z * out.gamma_hat, d3.q - d3.Z * out.gamma_hat);
    if (tau <= 0.0) tau = 1e-12;
  }
  out.tau_used = tau;

  int K = cfg.K;
  HdLassoFit bp;
  if (K > 0) {
    bp = estimate_bprime_hd(d2, out.gamma_hat, make_basis(tau, K), cfg);
  } else {
    // provisional fit to size the beta active set, then the rate rule
    const Residualized r2 = residualize(d2, out.gamma_hat, tau);
    const SplineBasis provisional = make_basis(tau, default_interval_count(r2.n_masked));
    const HdLassoFit bp0 = estimate_bprime_hd(d2, out.gamma_hat, provisional, cfg);
    K = rate_interval_count(data.n(), bp0.active, gm.active, std::max(data.p1(), data.p2()));
    bp = (K == provisional.K) ? bp0
                              : estimate_bprime_hd(d2, out.gamma_hat, make_basis(tau, K), cfg);
  }
  out.K_used = K;
  out.omega_b_hat = bp.coef;

  const SplineBasis basis = make_basis(tau, K);
  const Residualized r3 = residualize(d3, out.gamma_hat, tau);
  std::vector<int> keep;
  for (int i = 0; i < d3.n(); ++i)
    if (r3.mask[i]) keep.push_back(i);
  const Dataset dm = d3.rows(keep);
  Eigen::VectorXd eta_m(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) eta_m[i] = r3.eta[keep[i]];
  out.n3 = dm.n();

  Eigen::VectorXd bprime(dm.n());
  for (int i = 0; i < dm.n(); ++i)
    bprime[i] = eval_basis_deriv(basis, eta_m[i]).dot(out.omega_b_hat);

  Eigen::MatrixXd Wm1(dm.n(), dm.p1() + dm.p2());
  Wm1.leftCols(dm.p1()) = dm.X;
  Wm1.rightCols(dm.p2()) = bprime.asDiagonal() * dm.Z;

  const Eigen::MatrixXd N = design_matrix(basis, eta_m);
  const Eigen::VectorXd yp = project_out(dm.y, N);
  const Eigen::VectorXd sp = project_out(dm.s(), N);
  const Eigen::MatrixXd Wp = project_out(Wm1, N);

  out.lambda0 = choose_lambda_projected(dm.y, Wm1, eta_m, basis, cfg, 3);
  out.theta_Y = run_lasso(Wp, yp, out.lambda0, cfg.max_iters);
  // no one-SE conservatism here: the S-regression exists to orthogonalize
  // the treatment residual against W, and under-selecting its support lets
  // the Y-stage shrinkage bias leak into the ratio
  out.lambda1 = choose_lambda_projected(dm.s(), Wm1, eta_m, basis, cfg, 4, /*one_se=*/false);
  out.theta_S = run_lasso(Wp, sp, out.lambda1, cfg.max_iters);

  const Eigen::VectorXd s_res = sp - Wp * out.theta_S;
  const Eigen::VectorXd y_res = yp - Wp * out.theta_Y;
  const double denom = s_res.squaredNorm();
  out.sigma2_hat = std::sqrt(denom / dm.n());
  if (out.sigma2_hat < 1e-8)
    throw DegenerateVarianceError("fit_hd: S-residual variance is degenerate");

  out.alpha_hat = y_res.dot(s_res) / denom;

  const Eigen::VectorXd eps = yp - sp * out.alpha_hat - Wp * out.theta_Y;
  out.sigma1_hat =
      std::sqrt((eps.array().square() * s_res.array().square()).sum() / dm.n());

  const double half = 1.96 * out.sigma1_hat / (out.sigma2_hat * out.sigma2_hat * std::sqrt(dm.n()));
  out.ci95 = {out.alpha_hat - half, out.alpha_hat + half};
  return out;
}

}  // namespace scents
