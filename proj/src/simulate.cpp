#include "scents/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "scents/errors.hpp"
#include "scents/numerics.hpp"

namespace scents {

void DgpConfig::check() const {
  if (n < 9) throw std::invalid_argument("DgpConfig: n too small");
  if (p1 < 1 || p2 < 1) throw std::invalid_argument("DgpConfig: dimensions must be positive");
  if (beta0.size() != p1 || gamma0.size() != p2)
    throw std::invalid_argument("DgpConfig: coefficient lengths inconsistent");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("DgpConfig: |rho| must be < 1");
  if (!(sigma_eps > 0.0)) throw std::invalid_argument("DgpConfig: sigma_eps must be positive");
}

DgpConfig DgpConfig::reference(int n, std::uint64_t seed) {
  DgpConfig c;
  c.n = n;
  c.p1 = c.p2 = 2;
  c.alpha0 = 1.0;
  c.beta0 = Eigen::Vector2d(1.0, -1.0);
  c.gamma0 = Eigen::Vector2d(1.0, 0.5);
  c.b_kind = BKind::sine;
  c.rho = 0.5;
  c.sigma_eps = 1.0;
  c.overlap = true;
  c.seed = seed;
  return c;
}

DgpConfig DgpConfig::reference_hd(std::uint64_t seed) {
  DgpConfig c;
  c.n = 300;
  c.p1 = c.p2 = 500;
  c.alpha0 = 1.0;
  c.s_beta = c.s_gamma = 3;
  c.beta0 = Eigen::VectorXd::Zero(c.p1);
  c.gamma0 = Eigen::VectorXd::Zero(c.p2);
  for (int j = 0; j < c.s_beta; ++j) c.beta0[j] = 1.0;
  for (int j = 0; j < c.s_gamma; ++j) c.gamma0[j] = 1.0;
  c.b_kind = BKind::sine;
  c.rho = 0.5;
  c.overlap = false;
  c.seed = seed;
  return c;
}

double b_function(const DgpConfig& cfg, double eta) {
  switch (cfg.b_kind) {
    case BKind::zero:
      return 0.0;
    case BKind::linear: {
      double c = cfg.linear_slope;
      if (c == 0.0)
        c = cfg.rho * cfg.sigma_eps / std::sqrt(1.0 - cfg.rho * cfg.rho);
      return c * eta;
    }
    case BKind::sine:
      return std::sin(eta);
    case BKind::quadratic_centered:
      return eta * eta - 1.0;
  }
  return 0.0;
}

Dataset generate(const DgpConfig& cfg) {
  cfg.check();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset d;
  d.X.resize(cfg.n, cfg.p1);
  d.Z.resize(cfg.n, cfg.p2);
  d.y.resize(cfg.n);
  d.q.resize(cfg.n);

  const int shared = cfg.overlap ? std::min(cfg.p1, cfg.p2) : 0;
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p1; ++j) d.X(i, j) = normal(rng);
    for (int j = 0; j < cfg.p2; ++j)
      d.Z(i, j) = (j < shared) ? d.X(i, j) : normal(rng);

    const double eta = normal(rng);
    const double sd_profile = cfg.heteroskedastic ? (1.0 + eta * eta) : 1.0;
    const double eps = cfg.sigma_eps * sd_profile * normal(rng);
    const double nu = b_function(cfg, eta) + eps;

    d.q[i] = d.Z.row(i).dot(cfg.gamma0) + eta;
    const double s = d.q[i] >= 0.0 ? 1.0 : 0.0;
    d.y[i] = cfg.alpha0 * s + d.X.row(i).dot(cfg.beta0) + nu;
  }
  return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const auto n = static_cast<double>(z.size());
  double d = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

namespace {

// Kahan-compensated mean.
double stable_mean(const std::vector<double>& v) {
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = x - c;
    const double s = sum + t;
    c = (s - sum) - t;
    sum = s;
  }
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double naive_s_coefficient(const Dataset& d) {
  Eigen::MatrixXd D(d.n(), 2 + d.p1());
  D.col(0).setOnes();
  D.col(1) = d.s();
  D.rightCols(d.p1()) = d.X;
  return ols(D, d.y)[1];
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& body) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

McSummary monte_carlo(const DgpConfig& dgp, const FitConfig& cfg, int R, int threads) {
  if (R < 20) throw std::invalid_argument("monte_carlo: R must be at least 20");

  std::vector<double> alphas(R, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> naive(R, std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> failed{0};

  parallel_for(R, threads, [&](int r) {
    DgpConfig g = dgp;
    g.seed = dgp.seed + 0x51ED2701ULL * static_cast<std::uint64_t>(r + 1);
    FitConfig fc = cfg;
    fc.seed = cfg.seed + static_cast<std::uint64_t>(r);
    try {
      const Dataset d = generate(g);
      alphas[r] = (fc.wls ? fit_wls(d, fc) : fit(d, fc)).alpha_bar;
      naive[r] = naive_s_coefficient(d);
    } catch (const std::exception&) {
      failed.fetch_add(1);
    }
  });

  McSummary out;
  out.R = R;
  out.n_failed = failed.load();
  if (out.n_failed > R / 10)
    throw BootstrapFailureError("monte_carlo: more than 10% of replicates failed");

  std::vector<double> a, nv;
  for (int r = 0; r < R; ++r) {
    if (std::isfinite(alphas[r])) {
      a.push_back(alphas[r]);
      nv.push_back(naive[r]);
    }
  }
  out.alphas = a;

  const double mean_a = stable_mean(a);
  out.bias = mean_a - dgp.alpha0;
  std::vector<double> sq(a.size());
  for (size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - mean_a) * (a[i] - mean_a);
  out.sd = std::sqrt(stable_mean(sq) * a.size() / std::max<size_t>(a.size() - 1, 1));
  std::vector<double> e2(a.size());
  for (size_t i = 0; i < a.size(); ++i)
    e2[i] = (a[i] - dgp.alpha0) * (a[i] - dgp.alpha0);
  out.rmse = std::sqrt(stable_mean(e2));
  out.naive_bias = stable_mean(nv) - dgp.alpha0;

  std::vector<double> z(a.size());
  const double sd = std::max(out.sd, 1e-300);
  for (size_t i = 0; i < a.size(); ++i) z[i] = (a[i] - dgp.alpha0) / sd;
  out.ks_stat = ks_distance(std::move(z));
  return out;
}

}  // namespace scents
