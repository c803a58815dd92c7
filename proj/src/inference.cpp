#include "scents/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "scents/errors.hpp"

namespace scents {

namespace {

Dataset resample_rows(const Dataset& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = data.n();
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  return data.rows(idx);
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

std::uint64_t sub_seed(std::uint64_t seed, int replicate, int attempt) {
  std::uint64_t h = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(replicate + 1));
  h ^= static_cast<std::uint64_t>(attempt) << 32;
  h *= 0xBF58476D1CE4E5B9ULL;
  return h;
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

BootstrapResult bootstrap_ci(const Dataset& data, const FitConfig& cfg,
                             const BootstrapOptions& opt) {
  if (opt.B < 50) throw std::invalid_argument("bootstrap_ci: B must be at least 50");
  if (!(opt.level > 0.5 && opt.level < 1.0))
    throw std::invalid_argument("bootstrap_ci: level must lie in (0.5, 1)");
  data.validate();

  BootstrapResult out;
  out.B = opt.B;
  out.level = opt.level;
  out.point = (cfg.wls ? fit_wls(data, cfg) : fit(data, cfg)).alpha_bar;

  std::vector<double> reps(opt.B, std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> failed{0};

  parallel_for(opt.B, opt.threads, [&](int b) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::uint64_t s = sub_seed(opt.seed, b, attempt);
      try {
        const Dataset boot = resample_rows(data, s);
        FitConfig fc = cfg;
        if (opt.refresh_split) fc.seed = s;
        reps[b] = (fc.wls ? fit_wls(boot, fc) : fit(boot, fc)).alpha_bar;
        return;
      } catch (const SingularDesignError&) {
        // retried once with a new sub-seed
      } catch (const std::exception&) {
        break;
      }
    }
    failed.fetch_add(1);
  });

  out.n_failed = failed.load();
  if (out.n_failed * 20 > opt.B)
    throw BootstrapFailureError("bootstrap_ci: more than 5% of replicates failed");

  std::vector<double> good;
  good.reserve(opt.B);
  for (double v : reps)
    if (std::isfinite(v)) good.push_back(v);

  double sum = 0.0;
  for (double v : good) sum += v;
  out.boot_mean = sum / static_cast<double>(good.size());
  double ss = 0.0;
  for (double v : good) ss += (v - out.boot_mean) * (v - out.boot_mean);
  out.boot_se = std::sqrt(ss / std::max<double>(good.size() - 1, 1.0));

  const double lo = (1.0 - opt.level) / 2.0;
  out.ci = {percentile(good, lo), percentile(good, 1.0 - lo)};
  return out;
}

double coverage_check(const DgpConfig& dgp, const FitConfig& cfg, int R,
                      const BootstrapOptions& opt) {
  if (R < 50) throw std::invalid_argument("coverage_check: R must be at least 50");
  std::vector<int> covered(R, 0);
  parallel_for(R, opt.threads, [&](int r) {
    DgpConfig g = dgp;
    g.seed = dgp.seed + 0x2545F491ULL * static_cast<std::uint64_t>(r + 1);
    BootstrapOptions bo = opt;
    bo.seed = opt.seed + static_cast<std::uint64_t>(r);
    bo.threads = 1;
    try {
      const Dataset d = generate(g);
      const BootstrapResult br = bootstrap_ci(d, cfg, bo);
      covered[r] = (br.ci.first <= dgp.alpha0 && dgp.alpha0 <= br.ci.second) ? 1 : 0;
    } catch (const std::exception&) {
      covered[r] = 0;
    }
  });
  int c = 0;
  for (int v : covered) c += v;
  return static_cast<double>(c) / static_cast<double>(R);
}

}  // namespace scents
