#include "scents/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scents {

SplineBasis make_basis(double tau, int K) {
  if (!(tau > 0.0)) throw std::invalid_argument("make_basis: tau must be positive");
  if (K < 1) throw std::invalid_argument("make_basis: K must be at least 1");
  SplineBasis b;
  b.tau = tau;
  b.K = K;
  b.degree = 3;
  b.dim = K + 3;
  b.scale = std::sqrt(static_cast<double>(K) / (2.0 * tau));
  b.knots.resize(K + 2 * b.degree + 1);
  const double h = 2.0 * tau / K;
  for (int i = 0; i <= b.degree; ++i) b.knots[i] = -tau;
  for (int i = 1; i < K; ++i) b.knots[b.degree + i] = -tau + i * h;
  for (int i = 0; i <= b.degree; ++i) b.knots[b.degree + K + i] = tau;
  return b;
}

namespace {

// Cox-de Boor triangle up to degree `upto` over the full knot vector.
// On return, vals[i] holds N_{i,upto}(x).  The half-open convention is
// used except at x == tau, where the last nondegenerate interval is
// treated as closed so the clamped end evaluates to 1.
void deboor_upto(const SplineBasis& b, double x, int upto, std::vector<double>& vals) {
  const auto& t = b.knots;
  const int nspans = static_cast<int>(t.size()) - 1;
  vals.assign(nspans, 0.0);
  if (x == b.tau) {
    for (int i = nspans - 1; i >= 0; --i) {
      if (t[i] < t[i + 1]) {
        vals[i] = 1.0;
        break;
      }
    }
  } else {
    for (int i = 0; i < nspans; ++i) {
      if (t[i] <= x && x < t[i + 1]) vals[i] = 1.0;
    }
  }
  for (int p = 1; p <= upto; ++p) {
    for (int i = 0; i + p < nspans; ++i) {
      double v = 0.0;
      const double d1 = t[i + p] - t[i];
      if (d1 > 0.0) v += (x - t[i]) / d1 * vals[i];
      const double d2 = t[i + p + 1] - t[i + 1];
      if (d2 > 0.0) v += (t[i + p + 1] - x) / d2 * vals[i + 1];
      vals[i] = v;
    }
  }
}

}  // namespace

Eigen::VectorXd eval_basis(const SplineBasis& basis, double x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.dim);
  if (x < -basis.tau || x > basis.tau) return out;
  std::vector<double> vals;
  deboor_upto(basis, x, basis.degree, vals);
  for (int j = 0; j < basis.dim; ++j) out[j] = basis.scale * vals[j];
  return out;
}

Eigen::VectorXd eval_basis_deriv(const SplineBasis& basis, double x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.dim);
  if (x < -basis.tau || x > basis.tau) return out;
  std::vector<double> vals;
  deboor_upto(basis, x, basis.degree - 1, vals);
  const auto& t = basis.knots;
  const int p = basis.degree;
  // d/dx N_{j,p} = p * ( N_{j,p-1}/(t_{j+p}-t_j) - N_{j+1,p-1}/(t_{j+p+1}-t_{j+1}) )
  for (int j = 0; j < basis.dim; ++j) {
    double v = 0.0;
    const double d1 = t[j + p] - t[j];
    if (d1 > 0.0) v += vals[j] / d1;
    const double d2 = t[j + p + 1] - t[j + 1];
    if (d2 > 0.0) v -= vals[j + 1] / d2;
    out[j] = basis.scale * p * v;
  }
  return out;
}

Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::VectorXd& xs) {
  Eigen::MatrixXd out(xs.size(), basis.dim);
  for (Eigen::Index i = 0; i < xs.size(); ++i) out.row(i) = eval_basis(basis, xs[i]).transpose();
  return out;
}

int default_interval_count(int n) {
  const int k = static_cast<int>(std::lround(std::pow(std::max(n, 1), 0.25)));
  return std::clamp(k, 4, 50);
}

}  // namespace scents
