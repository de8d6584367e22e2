#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "test_support.hpp"

using testsupport::CliResult;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::run_cli;
using testsupport::write_file;

namespace {

const char* kCountSpec = R"({
  "N": 5,
  "order": 1,
  "H": {"type": "inar1", "alpha": -1.0},
  "marginal": {"type": "binomial", "N": 5, "nu": 0.4},
  "tol": 1e-10,
  "seed": 7
})";

const char* kIndependentSpec = R"({
  "N": 2,
  "order": 1,
  "H": {"type": "table", "values": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]},
  "marginal": {"type": "table", "values": [0.2, 0.3, 0.5]},
  "tol": 1e-11,
  "seed": 3
})";

int fail_line_count(const std::string& text) {
  int count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (text.compare(pos, 5, "FAIL ") == 0) ++count;
    pos = end + 1;
  }
  return count;
}

}  // namespace

TEST_CASE("construct then verify round-trips through files") {
  TempDir dir("cli-roundtrip");
  write_file(dir.file("spec.json"), kCountSpec);
  const CliResult built = run_cli("construct --spec " +
                                      dir.file("spec.json").string() +
                                      " --out " + dir.file("out.json").string(),
                                  dir);
  CHECK(built.exit_code == 0);
  CHECK(built.out.find("wrote") != std::string::npos);

  const CliResult verified = run_cli(
      "verify --spec " + dir.file("out.json").string() + " --out " +
          dir.file("report.json").string(),
      dir);
  CHECK(verified.exit_code == 0);
  CHECK(verified.out.find("verification passed") != std::string::npos);
  CHECK(fail_line_count(verified.out) == 0);

  const auto report = nlohmann::json::parse(read_file(dir.file("report.json")));
  CHECK(report.at("pass") == true);
  CHECK(report.at("checks").size() == 7);  // first-order battery
  for (const auto& check : report.at("checks")) {
    CHECK(check.at("pass") == true);
  }
}

TEST_CASE("construct and sample are byte-deterministic") {
  TempDir dir("cli-determinism");
  write_file(dir.file("spec.json"), kCountSpec);
  const std::string spec = dir.file("spec.json").string();
  CHECK(run_cli("construct --spec " + spec + " --out " +
                    dir.file("a.json").string(),
                dir)
            .exit_code == 0);
  CHECK(run_cli("construct --spec " + spec + " --out " +
                    dir.file("b.json").string(),
                dir)
            .exit_code == 0);
  const std::string a = read_file(dir.file("a.json"));
  CHECK(a == read_file(dir.file("b.json")));
  CHECK(!a.empty());

  const std::string result = dir.file("a.json").string();
  CHECK(run_cli("sample --spec " + result + " --n 200 --out " +
                    dir.file("s1.csv").string(),
                dir)
            .exit_code == 0);
  CHECK(run_cli("sample --spec " + result + " --n 200 --out " +
                    dir.file("s2.csv").string(),
                dir)
            .exit_code == 0);
  const std::string s1 = read_file(dir.file("s1.csv"));
  CHECK(s1 == read_file(dir.file("s2.csv")));
  CHECK(s1.substr(0, 4) == "t,x\n");

  // An explicit seed overrides the one recorded in the result file.
  CHECK(run_cli("sample --spec " + result + " --n 200 --seed 9 --out " +
                    dir.file("s3.csv").string(),
                dir)
            .exit_code == 0);
  CHECK(s1 != read_file(dir.file("s3.csv")));

  CHECK(run_cli("sample --spec " + result + " --n 0 --out " +
                    dir.file("empty.csv").string(),
                dir)
            .exit_code == 0);
  CHECK(read_file(dir.file("empty.csv")) == "t,x\n");
}

TEST_CASE("stats reports exact autocorrelations for a stored result") {
  TempDir dir("cli-stats-exact");
  write_file(dir.file("spec.json"), kIndependentSpec);
  REQUIRE(run_cli("construct --spec " + dir.file("spec.json").string() +
                      " --out " + dir.file("out.json").string(),
                  dir)
              .exit_code == 0);
  const CliResult stats = run_cli(
      "stats --spec " + dir.file("out.json").string() + " --max-lag 5 --out " +
          dir.file("stats.json").string(),
      dir);
  CHECK(stats.exit_code == 0);
  const auto j = nlohmann::json::parse(read_file(dir.file("stats.json")));
  CHECK(j.at("mode") == "exact");
  CHECK(j.at("acf").size() == 6);
  CHECK(j.at("acf")[0].get<double>() == 1.0);
  for (int k = 1; k <= 5; ++k) {
    CHECK(std::abs(j.at("acf")[k].get<double>()) <= 1e-9);
  }
  const std::vector<double> want{0.2, 0.3, 0.5};
  for (int y = 0; y < 3; ++y) {
    CHECK(std::abs(j.at("marginal")[y].get<double>() - want[y]) <= 1e-8);
  }
  CHECK(j.at("pacf")[0].get<double>() ==
        doctest::Approx(j.at("acf")[1].get<double>()).epsilon(1e-12));
}

TEST_CASE("stats switches to sample mode for a series file") {
  TempDir dir("cli-stats-sample");
  write_file(dir.file("spec.json"), kIndependentSpec);
  REQUIRE(run_cli("construct --spec " + dir.file("spec.json").string() +
                      " --out " + dir.file("out.json").string(),
                  dir)
              .exit_code == 0);
  REQUIRE(run_cli("sample --spec " + dir.file("out.json").string() +
                      " --n 500 --out " + dir.file("series.csv").string(),
                  dir)
              .exit_code == 0);
  const CliResult stats = run_cli(
      "stats --spec " + dir.file("series.csv").string() + " --max-lag 4", dir);
  CHECK(stats.exit_code == 0);
  const auto j = nlohmann::json::parse(stats.out);
  CHECK(j.at("mode") == "sample");
  CHECK(j.at("acf")[0].get<double>() == 1.0);
  double mass = 0.0;
  for (const auto& v : j.at("marginal")) mass += v.get<double>();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the estimation pipeline recovers the coefficient end to end") {
  TempDir dir("cli-fit");
  write_file(dir.file("spec.json"), kCountSpec);
  REQUIRE(run_cli("construct --spec " + dir.file("spec.json").string() +
                      " --out " + dir.file("truth.json").string(),
                  dir)
              .exit_code == 0);
  REQUIRE(run_cli("sample --spec " + dir.file("truth.json").string() +
                      " --n 10000 --out " + dir.file("series.csv").string(),
                  dir)
              .exit_code == 0);
  write_file(dir.file("model.json"), R"({
    "N": 5,
    "order": 1,
    "basis": [{"type": "lag_product", "lag": 1}]
  })");
  const CliResult fitted = run_cli(
      "fit --spec " + dir.file("model.json").string() + " --series " +
          dir.file("series.csv").string() + " --out " +
          dir.file("fit.json").string(),
      dir);
  CHECK(fitted.exit_code == 0);
  CHECK(fitted.out.find("theta_hat") != std::string::npos);
  const auto j = nlohmann::json::parse(read_file(dir.file("fit.json")));
  CHECK(j.at("kind") == "fit");
  const double theta = j.at("fit").at("theta_hat")[0].get<double>();
  CHECK(theta >= -1.15);
  CHECK(theta <= -0.85);
}

TEST_CASE("a state that never appears aborts estimation with its label") {
  TempDir dir("cli-unobserved");
  write_file(dir.file("model.json"), R"({
    "N": 2,
    "order": 1,
    "basis": []
  })");
  write_file(dir.file("series.csv"), "t,x\n1,0\n2,1\n3,0\n4,1\n5,0\n");
  const CliResult res = run_cli(
      "fit --spec " + dir.file("model.json").string() + " --series " +
          dir.file("series.csv").string() + " --out " +
          dir.file("fit.json").string(),
      dir);
  CHECK(res.exit_code == 5);
  const auto err = nlohmann::json::parse(res.err);
  CHECK(err.at("error").at("type") == "unobserved_state");
  CHECK(err.at("error").at("missing") == nlohmann::json::array({2}));
}

TEST_CASE("malformed specs are rejected with the offending field named") {
  TempDir dir("cli-badspec");
  write_file(dir.file("missing.json"), R"({"N": 5, "order": 1})");
  const CliResult missing = run_cli(
      "construct --spec " + dir.file("missing.json").string() + " --out " +
          dir.file("out.json").string(),
      dir);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("'H'") != std::string::npos);

  write_file(dir.file("broken.json"), "this is not json");
  const CliResult broken = run_cli(
      "construct --spec " + dir.file("broken.json").string() + " --out " +
          dir.file("out.json").string(),
      dir);
  CHECK(broken.exit_code == 2);

  const CliResult usage = run_cli("frobnicate", dir);
  CHECK(usage.exit_code == 2);
  const auto err = nlohmann::json::parse(usage.err);
  CHECK(err.at("error").at("type") == "usage");
}

TEST_CASE("a corrupted kernel row is caught by verification") {
  TempDir dir("cli-corrupt-kernel");
  write_file(dir.file("spec.json"), kCountSpec);
  REQUIRE(run_cli("construct --spec " + dir.file("spec.json").string() +
                      " --out " + dir.file("out.json").string(),
                  dir)
              .exit_code == 0);
  auto j = nlohmann::json::parse(read_file(dir.file("out.json")));
  // Perturb one transition probability and renormalize its row, so row sums
  // stay perfect but the stored decomposition no longer matches.
  auto& row = j.at("kernel").at(0);
  row[0] = row[0].get<double>() * 1.25;
  double sum = 0.0;
  for (const auto& v : row) sum += v.get<double>();
  for (auto& v : row) v = v.get<double>() / sum;
  write_file(dir.file("tampered.json"), j.dump(2));

  const CliResult res =
      run_cli("verify --spec " + dir.file("tampered.json").string(), dir);
  CHECK(res.exit_code == 6);
  CHECK(res.out.find("verification FAILED") != std::string::npos);
  CHECK(res.out.find("FAIL  log_kernel_decomposition") != std::string::npos);
}

TEST_CASE("a tiny bias in one offset trips exactly the decomposition check") {
  TempDir dir("cli-corrupt-delta");
  write_file(dir.file("spec.json"), kCountSpec);
  REQUIRE(run_cli("construct --spec " + dir.file("spec.json").string() +
                      " --out " + dir.file("out.json").string(),
                  dir)
              .exit_code == 0);
  auto j = nlohmann::json::parse(read_file(dir.file("out.json")));
  j.at("delta")[0] = j.at("delta")[0].get<double>() + 1e-6;
  write_file(dir.file("tampered.json"), j.dump(2));

  const CliResult res =
      run_cli("verify --spec " + dir.file("tampered.json").string(), dir);
  CHECK(res.exit_code == 6);
  CHECK(fail_line_count(res.out) == 1);
  CHECK(res.out.find("FAIL  log_kernel_decomposition") != std::string::npos);
}

TEST_CASE("the state cap environment variable limits construction size") {
  TempDir dir("cli-state-cap");
  write_file(dir.file("spec.json"), kCountSpec);
  const std::string args = "construct --spec " +
                           dir.file("spec.json").string() + " --out " +
                           dir.file("out.json").string();
  const CliResult capped = run_cli(args, dir, "MINMARKOV_STATE_CAP=4 ");
  CHECK(capped.exit_code == 3);
  CHECK(nlohmann::json::parse(capped.err).at("error").at("type") ==
        "resource");

  const CliResult bad_cap = run_cli(args, dir, "MINMARKOV_STATE_CAP=abc ");
  CHECK(bad_cap.exit_code == 2);

  CHECK(run_cli(args, dir, "MINMARKOV_STATE_CAP=6 ").exit_code == 0);
}

TEST_CASE("an unreachable iteration cap surfaces as non-convergence") {
  TempDir dir("cli-max-iter");
  write_file(dir.file("spec.json"), kCountSpec);
  const CliResult res = run_cli(
      "construct --spec " + dir.file("spec.json").string() +
          " --max-iter 2 --out " + dir.file("out.json").string(),
      dir);
  CHECK(res.exit_code == 4);
  const auto err = nlohmann::json::parse(res.err);
  CHECK(err.at("error").at("type") == "non_convergence");
  CHECK(err.at("error").at("iterations") == 2);
}

TEST_CASE("the version flag prints and exits cleanly") {
  TempDir dir("cli-version");
  const CliResult res = run_cli("--version", dir);
  CHECK(res.exit_code == 0);
  CHECK(!res.out.empty());
}
