#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>

#include "scents/csv.hpp"
#include "scents/errors.hpp"
#include "scents/estimator.hpp"
#include "scents/highdim.hpp"
#include "scents/inference.hpp"
#include "scents/simulate.hpp"

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

int env_threads() {
  if (const char* v = std::getenv("SCENTS_THREADS")) {
    const int t = std::atoi(v);
    if (t > 0) return t;
  }
  return 1;
}

ordered_json vec_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

scents::ColumnMap load_map(const std::string& path) {
  scents::ColumnMap m;
  if (path.empty()) return m;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path);
  ordered_json j = ordered_json::parse(in);
  if (j.contains("y")) m.y = j["y"].get<std::string>();
  if (j.contains("q")) m.q = j["q"].get<std::string>();
  if (j.contains("x")) m.x = j["x"].get<std::vector<std::string>>();
  if (j.contains("z")) m.z = j["z"].get<std::vector<std::string>>();
  return m;
}

void emit(const ordered_json& report) { std::cout << report.dump(2) << "\n"; }

int fail(const std::string& type, const std::string& message) {
  ordered_json err;
  err["error"]["type"] = type;
  err["error"]["message"] = message;
  std::cerr << err.dump(2) << "\n";
  return 1;
}

scents::DgpConfig parse_dgp(const std::string& spec, std::uint64_t seed) {
  scents::DgpConfig c = scents::DgpConfig::reference(900, seed);
  std::stringstream ss(spec);
  std::string kv;
  int p1 = c.p1, p2 = c.p2, s_beta = 0, s_gamma = 0;
  while (std::getline(ss, kv, ',')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad --dgp entry: " + kv);
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "n") c.n = std::stoi(val);
    else if (key == "p1") p1 = std::stoi(val);
    else if (key == "p2") p2 = std::stoi(val);
    else if (key == "alpha0") c.alpha0 = std::stod(val);
    else if (key == "rho") c.rho = std::stod(val);
    else if (key == "sigma_eps") c.sigma_eps = std::stod(val);
    else if (key == "hetero") c.heteroskedastic = std::stoi(val) != 0;
    else if (key == "overlap") c.overlap = std::stoi(val) != 0;
    else if (key == "s_beta") s_beta = std::stoi(val);
    else if (key == "s_gamma") s_gamma = std::stoi(val);
    else if (key == "linear_slope") c.linear_slope = std::stod(val);
    else if (key == "b") {
      if (val == "zero") c.b_kind = scents::BKind::zero;
      else if (val == "linear") c.b_kind = scents::BKind::linear;
      else if (val == "sine") c.b_kind = scents::BKind::sine;
      else if (val == "quadratic") c.b_kind = scents::BKind::quadratic_centered;
      else throw std::runtime_error("unknown b kind: " + val);
    } else {
      throw std::runtime_error("unknown --dgp key: " + key);
    }
  }
  c.p1 = p1;
  c.p2 = p2;
  c.s_beta = s_beta;
  c.s_gamma = s_gamma;
  c.beta0 = Eigen::VectorXd::Zero(p1);
  c.gamma0 = Eigen::VectorXd::Zero(p2);
  const int nb = s_beta > 0 ? s_beta : p1;
  const int ng = s_gamma > 0 ? s_gamma : p2;
  for (int j = 0; j < nb && j < p1; ++j) c.beta0[j] = (j % 2 == 0) ? 1.0 : -1.0;
  for (int j = 0; j < ng && j < p2; ++j) c.gamma0[j] = (j % 2 == 0) ? 1.0 : 0.5;
  return c;
}

struct CommonArgs {
  std::string input, map_path;
  double tau = 0.0;
  int K = 0;
  std::uint64_t seed = 0;
  bool wls = false;
  int threads = env_threads();
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_input) {
  auto* in = cmd->add_option("--input", a.input, "input CSV file");
  if (needs_input) in->required();
  cmd->add_option("--map", a.map_path, "JSON column-mapping file");
  cmd->add_option("--tau", a.tau, "truncation half-width (default: auto)");
  cmd->add_option("--K", a.K, "spline interval count (default: auto)");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--threads", a.threads, "worker threads (default: SCENTS_THREADS or 1)");
}

ordered_json config_echo(const CommonArgs& a) {
  ordered_json j;
  j["input"] = a.input;
  j["tau"] = a.tau > 0 ? ordered_json(a.tau) : ordered_json("auto");
  j["K"] = a.K > 0 ? ordered_json(a.K) : ordered_json("auto");
  j["seed"] = a.seed;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scents: treatment-effect estimation under score endogeneity"};
  app.require_subcommand(1);

  CommonArgs fa, ha, ba, sa, ca;
  std::string lambda_mode = "cv", dgp_spec;
  int B = 500, R = 100;
  double level = 0.95;
  double check_tau = 1.0;
  int check_K = 8;
  bool timings = false;
  app.add_flag("--timings", timings, "include wall-clock runtimes in reports");

  auto* cmd_fit = app.add_subcommand("fit", "fixed-dimension estimator");
  add_common(cmd_fit, fa, true);
  cmd_fit->add_flag("--wls", fa.wls, "weighted least squares mode");

  auto* cmd_hd = app.add_subcommand("fit-hd", "high-dimensional debiased estimator");
  add_common(cmd_hd, ha, true);
  cmd_hd->add_option("--lambda-mode", lambda_mode, "cv or theory")
      ->check(CLI::IsMember({"cv", "theory"}));

  auto* cmd_boot = app.add_subcommand("bootstrap", "Efron bootstrap confidence interval");
  add_common(cmd_boot, ba, true);
  cmd_boot->add_flag("--wls", ba.wls, "weighted least squares mode");
  cmd_boot->add_option("--B", B, "bootstrap replicates")->check(CLI::Range(50, 1000000));
  cmd_boot->add_option("--level", level, "confidence level");

  auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo study on a synthetic DGP");
  add_common(cmd_sim, sa, false);
  cmd_sim->add_option("--dgp", dgp_spec, "inline key=value DGP spec (comma separated)");
  cmd_sim->add_option("--R", R, "replications")->check(CLI::Range(20, 1000000));
  cmd_sim->add_flag("--wls", sa.wls, "weighted least squares mode");

  auto* cmd_spl = app.add_subcommand("spline-check", "run the spline property suite");
  cmd_spl->add_option("--tau", check_tau, "half-width");
  cmd_spl->add_option("--K", check_K, "interval count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto runtime_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t0)
        .count();
  };

  try {
    ordered_json report;
    report["schema_version"] = kSchemaVersion;

    if (cmd_fit->parsed()) {
      report["command"] = "fit";
      report["config"] = config_echo(fa);
      report["config"]["wls"] = fa.wls;
      const auto ing = scents::ingest_csv(fa.input, load_map(fa.map_path));
      scents::FitConfig cfg;
      cfg.tau = fa.tau;
      cfg.K = fa.K;
      cfg.seed = fa.seed;
      const scents::FixedFit f =
          fa.wls ? scents::fit_wls(ing.data, cfg) : scents::fit(ing.data, cfg);
      report["results"]["alpha_bar"] = f.alpha_bar;
      report["results"]["alpha_per_rotation"] = vec_to_json(f.alpha_per_rotation);
      report["results"]["theta"] = vec_to_json(f.theta);
      report["results"]["gamma_hat"] = vec_to_json(f.gamma_hat);
      report["diagnostics"]["n"] = ing.data.n();
      report["diagnostics"]["rows_dropped"] = ing.n_dropped;
      report["diagnostics"]["n_used"] = f.n_used;
      report["diagnostics"]["masked_fraction"] =
          3.0 * f.n_used / static_cast<double>(ing.data.n());
      report["diagnostics"]["condition_number"] = f.condition_number;
      report["diagnostics"]["tau"] = f.tau_used;
      report["diagnostics"]["K"] = f.K_used;
      report["diagnostics"]["identification_warning"] = f.identification_warning;
    } else if (cmd_hd->parsed()) {
      report["command"] = "fit-hd";
      report["config"] = config_echo(ha);
      report["config"]["lambda_mode"] = lambda_mode;
      const auto ing = scents::ingest_csv(ha.input, load_map(ha.map_path));
      scents::HdConfig cfg;
      cfg.tau = ha.tau;
      cfg.K = ha.K;
      cfg.seed = ha.seed;
      cfg.lambda_mode =
          lambda_mode == "theory" ? scents::LambdaMode::theory : scents::LambdaMode::cv;
      const scents::HighDimFit f = scents::fit_hd(ing.data, cfg);
      report["results"]["alpha_hat"] = f.alpha_hat;
      report["results"]["ci95"] = {f.ci95.first, f.ci95.second};
      report["results"]["sigma1_hat"] = f.sigma1_hat;
      report["results"]["sigma2_hat"] = f.sigma2_hat;
      report["diagnostics"]["n"] = ing.data.n();
      report["diagnostics"]["rows_dropped"] = ing.n_dropped;
      report["diagnostics"]["n3"] = f.n3;
      report["diagnostics"]["lambda"] = f.lambda;
      report["diagnostics"]["lambda0"] = f.lambda0;
      report["diagnostics"]["lambda1"] = f.lambda1;
      report["diagnostics"]["tau"] = f.tau_used;
      report["diagnostics"]["K"] = f.K_used;
    } else if (cmd_boot->parsed()) {
      report["command"] = "bootstrap";
      report["config"] = config_echo(ba);
      report["config"]["wls"] = ba.wls;
      report["config"]["B"] = B;
      report["config"]["level"] = level;
      const auto ing = scents::ingest_csv(ba.input, load_map(ba.map_path));
      scents::FitConfig cfg;
      cfg.tau = ba.tau;
      cfg.K = ba.K;
      cfg.seed = ba.seed;
      cfg.wls = ba.wls;
      scents::BootstrapOptions opt;
      opt.B = B;
      opt.level = level;
      opt.seed = ba.seed;
      opt.threads = ba.threads;
      const scents::BootstrapResult r = scents::bootstrap_ci(ing.data, cfg, opt);
      // summary keys follow the published table layout
      report["results"]["Point Estimate"] = r.point;
      report["results"]["Bootstrap mean."] = r.boot_mean;
      report["results"]["Bootstrap s.e."] = r.boot_se;
      report["results"]["Bootstrap 95% C.I."] = {r.ci.first, r.ci.second};
      report["results"]["level"] = r.level;
      report["diagnostics"]["n"] = ing.data.n();
      report["diagnostics"]["rows_dropped"] = ing.n_dropped;
      report["diagnostics"]["replicates_failed"] = r.n_failed;
    } else if (cmd_sim->parsed()) {
      report["command"] = "simulate";
      const scents::DgpConfig dgp = parse_dgp(dgp_spec, sa.seed);
      report["config"]["dgp"] = dgp_spec;
      report["config"]["R"] = R;
      report["config"]["seed"] = sa.seed;
      report["config"]["wls"] = sa.wls;
      scents::FitConfig cfg;
      cfg.tau = sa.tau;
      cfg.K = sa.K;
      cfg.seed = sa.seed;
      cfg.wls = sa.wls;
      const scents::McSummary s = scents::monte_carlo(dgp, cfg, R, sa.threads);
      report["results"]["bias"] = s.bias;
      report["results"]["sd"] = s.sd;
      report["results"]["rmse"] = s.rmse;
      report["results"]["ks_stat"] = s.ks_stat;
      report["results"]["naive_bias"] = s.naive_bias;
      report["diagnostics"]["replicates_failed"] = s.n_failed;
    } else if (cmd_spl->parsed()) {
      report["command"] = "spline-check";
      report["config"]["tau"] = check_tau;
      report["config"]["K"] = check_K;
      const scents::SplineBasis b = scents::make_basis(check_tau, check_K);
      std::mt19937_64 rng(12345);
      auto unif = [&] {
        return (2.0 * static_cast<double>(rng()) / static_cast<double>(UINT64_MAX) - 1.0) *
               check_tau;
      };
      bool pu = true, local = true, deriv = true, endpoints = true;
      for (int i = 0; i < 1000; ++i) {
        const double x = unif();
        const Eigen::VectorXd v = scents::eval_basis(b, x);
        pu = pu && std::abs(v.sum() / b.scale - 1.0) <= 1e-10;
        local = local && (v.array() != 0.0).count() <= 4;
        if (std::abs(x) < 0.999 * check_tau) {
          const double h = 1e-6;
          const Eigen::VectorXd fd =
              (scents::eval_basis(b, x + h) - scents::eval_basis(b, x - h)) / (2 * h);
          deriv = deriv && (fd - scents::eval_basis_deriv(b, x)).cwiseAbs().maxCoeff() <= 1e-5;
        }
      }
      Eigen::VectorXd left = scents::eval_basis(b, -check_tau) / b.scale;
      endpoints = std::abs(left[0] - 1.0) <= 1e-12 && left.tail(b.dim - 1).cwiseAbs().maxCoeff() <= 1e-12;
      report["results"]["partition_of_unity"] = pu;
      report["results"]["local_support"] = local;
      report["results"]["derivative_matches_fd"] = deriv;
      report["results"]["clamped_endpoints"] = endpoints;
      const bool all = pu && local && deriv && endpoints;
      report["results"]["all_passed"] = all;
      if (timings) report["diagnostics"]["runtime_ms"] = runtime_ms();
      emit(report);
      return all ? 0 : 1;
    }

    if (timings) report["diagnostics"]["runtime_ms"] = runtime_ms();
    emit(report);
    return 0;
  } catch (const scents::SingularDesignError& e) {
    return fail("singular_design", e.what());
  } catch (const scents::InsufficientDataError& e) {
    return fail("insufficient_data", e.what());
  } catch (const scents::EmptySupportError& e) {
    return fail("empty_support", e.what());
  } catch (const scents::DegenerateVarianceError& e) {
    return fail("degenerate_variance", e.what());
  } catch (const scents::BootstrapFailureError& e) {
    return fail("bootstrap_failure", e.what());
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
}
