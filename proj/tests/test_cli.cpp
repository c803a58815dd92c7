#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sys/wait.h>
#include <json.hpp>
#include <string>

#include "scents/csv.hpp"
#include "scents/estimator.hpp"
#include "scents/simulate.hpp"

using namespace scents;

namespace {

const std::string kFixtures = SCENTS_FIXTURE_DIR;
const std::string kBin = SCENTS_BIN;

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  RunResult r;
  FILE* p = popen((kBin + " " + args).c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, got);
  const int rc = pclose(p);
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

std::string write_generated_csv(int n, std::uint64_t seed) {
  const Dataset d = generate(DgpConfig::reference(n, seed));
  const std::string path = "cli_generated.csv";
  std::ofstream f(path);
  f.precision(17);
  f << "y,q,x_1,x_2,z_1,z_2\n";
  for (int i = 0; i < d.n(); ++i)
    f << d.y[i] << ',' << d.q[i] << ',' << d.X(i, 0) << ',' << d.X(i, 1) << ',' << d.Z(i, 0)
      << ',' << d.Z(i, 1) << '\n';
  return path;
}

}  // namespace

TEST_CASE("csv ingestion: prefix convention") {
  const IngestResult r = ingest_csv(kFixtures + "/basic.csv");
  CHECK(r.data.n() == 12);
  CHECK(r.data.p1() == 1);
  CHECK(r.data.p2() == 1);
  CHECK(r.n_dropped == 0);
  CHECK(r.data.y[0] == 0.5);
  CHECK(r.data.q[1] == -2.0);
  CHECK(r.data.X(3, 0) == 1.3);
  CHECK(r.data.Z(4, 0) == -1.2);
  CHECK(r.x_names == std::vector<std::string>{"x_1"});
}

TEST_CASE("csv ingestion: missing values are dropped and counted") {
  const IngestResult r = ingest_csv(kFixtures + "/missing.csv");
  CHECK(r.data.n() == 3);
  CHECK(r.n_dropped == 4);
}

TEST_CASE("csv ingestion: parse errors name the cell") {
  CHECK_THROWS_WITH_AS(ingest_csv(kFixtures + "/bad_cell.csv"), doctest::Contains("row 2"),
                       std::runtime_error);
  try {
    ingest_csv(kFixtures + "/bad_cell.csv");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x_1") != std::string::npos);
  }
}

TEST_CASE("csv ingestion: explicit mapping and quoted fields") {
  ColumnMap m;
  m.y = "out";
  m.q = "score";
  m.x = {"f1"};
  m.z = {"iv1"};
  const IngestResult r = ingest_csv(kFixtures + "/mapped.csv", m);
  CHECK(r.data.n() == 3);
  CHECK(r.data.y[2] == 0.3);

  ColumnMap bad = m;
  bad.y = "nope";
  CHECK_THROWS_WITH_AS(ingest_csv(kFixtures + "/mapped.csv", bad), doctest::Contains("nope"),
                       std::runtime_error);
}

TEST_CASE("fit reports are byte-identical across runs and match the library") {
  const std::string csv = write_generated_csv(360, 77);
  const std::string args = "fit --input " + csv + " --seed 5";
  const RunResult a = run(args);
  const RunResult b = run(args);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);

  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["command"] == "fit");
  FitConfig cfg;
  cfg.seed = 5;
  const FixedFit f = fit(ingest_csv(csv).data, cfg);
  CHECK(j["results"]["alpha_bar"].get<double>() == doctest::Approx(f.alpha_bar).epsilon(1e-12));
  CHECK(j["diagnostics"]["n"] == 360);
}

TEST_CASE("bootstrap report carries the published summary fields") {
  const std::string csv = write_generated_csv(240, 78);
  const RunResult r = run("bootstrap --input " + csv + " --seed 2 --B 60");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["results"].contains("Point Estimate"));
  CHECK(j["results"].contains("Bootstrap mean."));
  CHECK(j["results"].contains("Bootstrap s.e."));
  CHECK(j["results"].contains("Bootstrap 95% C.I."));
  CHECK(j["results"]["Bootstrap 95% C.I."].size() == 2);
}

TEST_CASE("simulate subcommand smoke run") {
  const RunResult r =
      run("simulate --dgp n=240 --R 20 --seed 3");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["results"].contains("bias"));
  CHECK(j["results"].contains("ks_stat"));
}

TEST_CASE("spline-check subcommand passes") {
  const RunResult r = run("spline-check --tau 1.5 --K 7");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["results"]["all_passed"] == true);
}

TEST_CASE("exit codes: usage errors vs runtime errors") {
  CHECK(run("fit --no-such-flag 2>/dev/null").status == 2);
  CHECK(run("2>/dev/null").status == 2);  // missing subcommand
  const RunResult r = run("fit --input does_not_exist.csv 2>&1");
  CHECK(r.status == 1);
  CHECK(r.out.find("error") != std::string::npos);
}
