#include "scents/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "scents/errors.hpp"
#include "scents/numerics.hpp"

namespace scents {

void Dataset::validate() const {
  const int m = n();
  if (q.size() != m || X.rows() != m || Z.rows() != m)
    throw std::invalid_argument("Dataset: row counts differ");
  if (m < 9) throw std::invalid_argument("Dataset: need at least 9 rows");
  if (!y.allFinite() || !q.allFinite() || !X.allFinite() || !Z.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
}

Dataset Dataset::rows(const std::vector<int>& idx) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(idx.size());
  out.y.resize(m);
  out.q.resize(m);
  out.X.resize(m, X.cols());
  out.Z.resize(m, Z.cols());
  const bool has_treat = treatment.size() == y.size() && treatment.size() > 0;
  if (has_treat) out.treatment.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.y[i] = y[idx[i]];
    out.q[i] = q[idx[i]];
    out.X.row(i) = X.row(idx[i]);
    out.Z.row(i) = Z.row(idx[i]);
    if (has_treat) out.treatment[i] = treatment[idx[i]];
  }
  return out;
}

namespace {

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

Eigen::VectorXd eta_of(const Dataset& d, const Eigen::VectorXd& gamma_hat) {
  return d.q - d.Z * gamma_hat;
}

}  // namespace

std::array<Dataset, 3> split_three(const Dataset& data, const FitConfig& cfg) {
  const int n = data.n();
  if (n < 9) throw InsufficientDataError("split_three: need at least 9 rows");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::array<std::vector<int>, 3> parts;
  if (cfg.split == SplitScheme::round_robin) {
    for (int i = 0; i < n; ++i) parts[i % 3].push_back(i);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[i], idx[j]);
    }
    const int base = n / 3, rem = n % 3;
    int pos = 0;
    for (int k = 0; k < 3; ++k) {
      const int sz = base + (k < rem ? 1 : 0);
      parts[k].assign(idx.begin() + pos, idx.begin() + pos + sz);
      pos += sz;
    }
  }
  return {data.rows(parts[0]), data.rows(parts[1]), data.rows(parts[2])};
}

Eigen::VectorXd estimate_gamma(const Dataset& d1) {
  const Eigen::MatrixXd& Z = d1.Z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < Z.cols()) {
    const auto perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "estimate_gamma: Z is rank-deficient (rank " << qr.rank() << " of " << Z.cols()
        << "); dependent columns:";
    for (Eigen::Index k = qr.rank(); k < Z.cols(); ++k) msg << " z_" << perm[k];
    throw SingularDesignError(msg.str());
  }
  return qr.solve(d1.q);
}

Residualized residualize(const Dataset& d, const Eigen::VectorXd& gamma_hat, double tau) {
  Residualized out;
  out.eta = eta_of(d, gamma_hat);
  if (tau <= 0.0) {
    std::vector<double> a(out.eta.size());
    for (Eigen::Index i = 0; i < out.eta.size(); ++i) a[i] = std::abs(out.eta[i]);
    tau = quantile(std::move(a), 0.9);
    if (tau <= 0.0) tau = 1e-12;
  }
  out.tau = tau;
  out.mask.resize(out.eta.size());
  out.n_masked = 0;
  for (Eigen::Index i = 0; i < out.eta.size(); ++i) {
    out.mask[i] = std::abs(out.eta[i]) <= tau;
    if (out.mask[i]) ++out.n_masked;
  }
  if (out.n_masked == 0)
    throw EmptySupportError("residualize: no observations with |eta_hat| <= tau");
  return out;
}

Eigen::VectorXd estimate_bprime(const Dataset& d2, const Eigen::VectorXd& gamma_hat,
                                const SplineBasis& basis) {
  const Residualized res = residualize(d2, gamma_hat, basis.tau);
  if (res.n_masked <= 1 + d2.p1() + basis.dim)
    throw InsufficientDataError("estimate_bprime: masked sample too small for spline fit");

  std::vector<int> keep;
  for (int i = 0; i < d2.n(); ++i)
    if (res.mask[i]) keep.push_back(i);
  const Dataset dm = d2.rows(keep);
  Eigen::VectorXd eta_m(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) eta_m[i] = res.eta[keep[i]];

  const Eigen::MatrixXd N = design_matrix(basis, eta_m);
  Eigen::MatrixXd A(dm.n(), 1 + dm.p1());
  A.col(0) = dm.s();
  A.rightCols(dm.p1()) = dm.X;

  const Eigen::MatrixXd Ap = project_out(A, N);
  const Eigen::VectorXd beta = ols(Ap, dm.y);
  return ols(N, dm.y - A * beta);
}

StackedSystem assemble_system(const Dataset& d3, const Eigen::VectorXd& gamma_hat,
                              const Eigen::VectorXd& omega_hat, const SplineBasis& basis) {
  const Residualized res = residualize(d3, gamma_hat, basis.tau);
  const int n = d3.n();
  const int n3 = res.n_masked;
  const int pcols = 1 + d3.p1() + d3.p2();

  StackedSystem sys;
  sys.n3 = n3;
  sys.W.setZero(n3 + n, pcols);
  sys.Na.setZero(n3 + n, basis.dim);
  sys.resp.resize(n3 + n);

  const Eigen::VectorXd S = d3.s();
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (!res.mask[i]) continue;
    const double bp = eval_basis_deriv(basis, res.eta[i]).dot(omega_hat);
    sys.W(r, 0) = S[i];
    sys.W.block(r, 1, 1, d3.p1()) = d3.X.row(i);
    sys.W.block(r, 1 + d3.p1(), 1, d3.p2()) = bp * d3.Z.row(i);
    sys.Na.row(r).head(basis.dim) = eval_basis(basis, res.eta[i]).transpose();
    sys.resp[r] = d3.y[i];
    ++r;
  }
  for (int i = 0; i < n; ++i) {
    sys.W.block(n3 + i, 1 + d3.p1(), 1, d3.p2()) = -d3.Z.row(i);
    sys.resp[n3 + i] = res.eta[i];
  }
  return sys;
}

namespace {

AlphaSolution solve_projected(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Na,
                              const Eigen::VectorXd& resp) {
  const Eigen::MatrixXd Wp = project_out(W, Na);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Wp, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1], smax = sv[0];
  const double cond = (smin > 0) ? (smax / smin) * (smax / smin)
                                 : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    std::ostringstream msg;
    msg << "solve_alpha: W' proj_perp W is numerically singular (condition number " << cond << ")";
    throw SingularDesignError(msg.str(), cond);
  }
  AlphaSolution out;
  out.condition_number = cond;
  out.theta = svd.solve(resp);
  out.alpha = out.theta[0];
  return out;
}

}  // namespace

AlphaSolution solve_alpha(const StackedSystem& sys) {
  return solve_projected(sys.W, sys.Na, sys.resp);
}

AlphaSolution solve_alpha(const StackedSystem& sys, const Eigen::VectorXd& weights) {
  if (weights.size() != sys.W.rows())
    throw std::invalid_argument("solve_alpha: weight length mismatch");
  if ((weights.array() <= 0.0).any())
    throw std::invalid_argument("solve_alpha: weights must be positive");
  const Eigen::VectorXd rs = weights.array().sqrt().inverse();
  return solve_projected(rs.asDiagonal() * sys.W, rs.asDiagonal() * sys.Na,
                         rs.cwiseProduct(sys.resp));
}

namespace {

struct RotationResult {
  double alpha;
  Eigen::VectorXd theta, gamma, omega;
  Eigen::MatrixXd wtw;  // W' proj_perp W of this rotation
  int n3;
  double cond, tau;
  int K;
  bool ident_warning;
};

Dataset center_part(const Dataset& d, const Eigen::RowVectorXd& muZ, double muQ) {
  Dataset c = d;
  c.treatment = d.s();  // freeze the indicator before shifting q
  c.Z.rowwise() -= muZ;
  c.q.array() -= muQ;
  c.X.rowwise() -= Eigen::RowVectorXd(d.X.colwise().mean());
  return c;
}

bool gamma_underidentified(const Dataset& dgc, const Eigen::VectorXd& gamma) {
  const int n1 = dgc.n(), p2 = dgc.p2();
  if (n1 <= p2) return false;
  const Eigen::VectorXd resid = dgc.q - dgc.Z * gamma;
  const double s2 = resid.squaredNorm() / (n1 - p2);
  const Eigen::MatrixXd cov = s2 * (dgc.Z.transpose() * dgc.Z).inverse();
  for (int j = 0; j < p2; ++j) {
    const double se = std::sqrt(std::max(cov(j, j), 1e-300));
    if (std::abs(gamma[j]) / se >= 1.0) return false;
  }
  return true;
}

RotationResult run_rotation(const Dataset& dg, const Dataset& db, const Dataset& da,
                            const FitConfig& cfg, bool weighted) {
  RotationResult rr;

  const Eigen::RowVectorXd muZ = dg.Z.colwise().mean();
  const double muQ = dg.q.mean();
  Dataset dgc = dg;
  dgc.treatment = dg.s();
  dgc.Z.rowwise() -= muZ;
  dgc.q.array() -= muQ;
  rr.gamma = estimate_gamma(dgc);
  rr.ident_warning = gamma_underidentified(dgc, rr.gamma);

  const Dataset dbc = center_part(db, muZ, muQ);
  const Dataset dac = center_part(da, muZ, muQ);

  double tau = cfg.tau;
  if (tau <= 0.0) {
    const Eigen::VectorXd eb = eta_of(dbc, rr.gamma), ea = eta_of(dac, rr.gamma);
    std::vector<double> a;
    a.reserve(eb.size() + ea.size());
    for (Eigen::Index i = 0; i < eb.size(); ++i) a.push_back(std::abs(eb[i]));
    for (Eigen::Index i = 0; i < ea.size(); ++i) a.push_back(std::abs(ea[i]));
    tau = quantile(std::move(a), 0.9);
    if (tau <= 0.0) tau = 1e-12;
  }

  int K = cfg.K;
  if (K <= 0) {
    const Residualized rb = residualize(dbc, rr.gamma, tau);
    K = default_interval_count(rb.n_masked);
  } else if (K < 4) {
    throw std::invalid_argument("fit: explicit K must be at least 4");
  }

  const SplineBasis basis = make_basis(tau, K);
  rr.tau = tau;
  rr.K = K;
  rr.omega = estimate_bprime(dbc, rr.gamma, basis);

  const StackedSystem sys = assemble_system(dac, rr.gamma, rr.omega, basis);
  rr.n3 = sys.n3;

  AlphaSolution sol;
  if (!weighted) {
    sol = solve_alpha(sys);
  } else {
    // variance profile from squared residuals of the unweighted joint fit
    Eigen::MatrixXd D(sys.W.rows(), sys.W.cols() + basis.dim);
    D.leftCols(sys.W.cols()) = sys.W;
    D.rightCols(basis.dim) = sys.Na;
    const Eigen::VectorXd coef = ols(D, sys.resp);
    const Eigen::VectorXd r = sys.resp - D * coef;
    const Eigen::MatrixXd Ntop = sys.Na.topRows(sys.n3);
    const Eigen::VectorXd r2 = r.head(sys.n3).array().square();
    const Eigen::VectorXd sig2_fit = Ntop * ols(Ntop, r2);

    std::vector<double> mv(sig2_fit.data(), sig2_fit.data() + sig2_fit.size());
    for (double& v : mv) v = std::abs(v);
    const double floor_w = std::max(1e-3 * quantile(std::move(mv), 0.5), 1e-12);

    Eigen::VectorXd w(sys.W.rows());
    for (int i = 0; i < sys.n3; ++i) w[i] = std::max(sig2_fit[i], floor_w);
    const Eigen::VectorXd eta_all = eta_of(dac, rr.gamma);
    const double var_eta =
        (eta_all.array() - eta_all.mean()).square().sum() / std::max(dac.n() - 1, 1);
    for (Eigen::Index i = sys.n3; i < w.size(); ++i) w[i] = std::max(var_eta, floor_w);
    sol = solve_alpha(sys, w);
  }

  rr.alpha = sol.alpha;
  rr.theta = sol.theta;
  rr.cond = sol.condition_number;
  const Eigen::MatrixXd Wp = project_out(sys.W, sys.Na);
  rr.wtw = sys.W.transpose() * Wp;
  return rr;
}

FixedFit fit_impl(const Dataset& data, const FitConfig& cfg, bool weighted) {
  data.validate();
  if (cfg.tau < 0.0) throw std::invalid_argument("fit: tau must be positive or auto");
  const auto parts = split_three(data, cfg);

  FixedFit out;
  for (int r = 0; r < 3; ++r) {
    const RotationResult rr =
        run_rotation(parts[r], parts[(r + 1) % 3], parts[(r + 2) % 3], cfg, weighted);
    out.alpha_per_rotation[r] = rr.alpha;
    out.identification_warning = out.identification_warning || rr.ident_warning;
    if (r == 2) {
      out.theta = rr.theta.head(1 + data.p1() + data.p2());
      out.gamma_hat = rr.gamma;
      out.omega_tau_hat = 3.0 * rr.wtw / data.n();
      out.omega_tau_hat = 0.5 * (out.omega_tau_hat + out.omega_tau_hat.transpose()).eval();
      out.n_used = rr.n3;
      out.condition_number = rr.cond;
      out.tau_used = rr.tau;
      out.K_used = rr.K;
    }
  }
  out.alpha_bar = out.alpha_per_rotation.mean();
  return out;
}

}  // namespace

FixedFit fit(const Dataset& data, const FitConfig& cfg) { return fit_impl(data, cfg, false); }

FixedFit fit_wls(const Dataset& data, const FitConfig& cfg) { return fit_impl(data, cfg, true); }

}  // namespace scents
