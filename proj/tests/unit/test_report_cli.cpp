#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "semicomp/cli.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/report.hpp"

using namespace semicomp;
namespace fs = std::filesystem;

namespace {

FitReport synthetic_report(bool intercept) {
  FitReport rep;
  rep.data_path = "study.csv";
  rep.rows_read = 103;
  rep.issues.push_back({4, "row id 3: example issue"});
  rep.excluded = {{3, ExclusionRule::ZeroDuration}, {39, ExclusionRule::MissingMismatch}};
  rep.summary.total = 96;
  rep.summary.counts = {30, 45, 20, 1};
  rep.summary.age_min = 8.8;
  rep.summary.age_max = 64.4;
  rep.summary.mismatch_min = 0.0;
  rep.summary.mismatch_max = 3.05;
  rep.summary.imputed = 31;
  rep.config.intercept = intercept;
  rep.config.extra_starts.push_back(Eigen::VectorXd::LinSpaced(3, 0.1, 0.3));

  FitResult& r = rep.result;
  r.estimates = intercept ? ModelParams::initial(true) : reference_params();
  r.parameter_names = r.estimates.parameter_names();
  const auto n = r.estimates.parameter_count();
  r.hessian = -Eigen::MatrixXd::Identity(n, n) * 50.0;
  r.hessian(0, 1) = r.hessian(1, 0) = 1.0 / 3.0;
  r.covariance = Eigen::MatrixXd::Identity(n, n) * 0.02;
  r.covariance(2, 2) = -1e-3;
  r.standard_errors = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.standard_errors(2) = std::nan("");
  r.ci95 = wald_intervals(r.estimates.to_vector(), r.covariance);
  r.log_likelihood = -351.123456789012345;
  r.convergence.converged = true;
  r.convergence.iterations = 42;
  r.convergence.gradient_norm = 3.1e-6;
  r.convergence.notes = {"example note"};
  r.start_log_likelihoods = {-400.5, -std::numeric_limits<double>::infinity(), -351.2};
  if (!intercept) rep.reference_log_likelihood = -352.0001;
  return rep;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Lines after the column header.
std::vector<std::string> table_rows(const std::string& table) {
  std::istringstream in(table);
  std::string line;
  std::vector<std::string> rows;
  bool after_header = false;
  while (std::getline(in, line)) {
    if (after_header) rows.push_back(line);
    if (line.rfind("Parameter", 0) == 0) after_header = true;
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("semicomp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const std::string kScenario =
    "n = 120\nseed = 4\ntheta = 2\nshapes = 0.5 0.8 0.5\nbeta1 = 0.05 -0.5\n"
    "beta2 = 0.05 0.2 -0.1\nbeta3 = 0.05 0.2 -0.1\ncensor = 8\n";

}  // namespace

TEST_CASE("reference values") {
  CHECK(reference_value("theta") == 1.677);
  CHECK(reference_value("x3.surgery") == 1.993);
  CHECK_FALSE(reference_value("x1.intercept").has_value());
  CHECK(reference_params().parameter_count() == 12);
}

TEST_CASE("JSON result documents read back bit-exactly") {
  for (bool intercept : {false, true}) {
    const FitReport rep = synthetic_report(intercept);
    const std::string a = fit_to_json(rep);
    const FitReport back = fit_from_json(a);
    CHECK(fit_to_json(back) == a);
    CHECK(back.result.log_likelihood == rep.result.log_likelihood);
    CHECK(back.result.hessian(0, 1) == rep.result.hessian(0, 1));
    CHECK(back.result.ci95[2].flagged);
    CHECK(std::isnan(back.result.start_log_likelihoods[1]));
    CHECK(back.config.extra_starts.size() == 1);
    CHECK(back.reference_log_likelihood.has_value() == !intercept);
  }
}

TEST_CASE("malformed JSON documents are input errors") {
  CHECK_THROWS_AS(fit_from_json("{"), InputError);
  CHECK_THROWS_AS(fit_from_json("{}"), InputError);
  std::string doc = fit_to_json(synthetic_report(false));
  const auto pos = doc.find("\"theta\"");
  REQUIRE(pos != std::string::npos);
  doc.replace(pos, 7, "\"thetta\"");
  CHECK_THROWS_AS(fit_from_json(doc), InputError);
}

TEST_CASE("fit table layout") {
  std::ostringstream t12, t15;
  write_fit_table(t12, synthetic_report(false));
  write_fit_table(t15, synthetic_report(true));
  const auto rows12 = table_rows(t12.str());
  const auto rows15 = table_rows(t15.str());
  CHECK(rows12.size() == 12);
  CHECK(rows15.size() == 15);
  CHECK(rows12[0].rfind("theta", 0) == 0);
  CHECK(rows12[0].find("1.677") != std::string::npos);
  CHECK(rows12[2].find("(n/a)") != std::string::npos);
  CHECK(t12.str().find("at reference values: -352.0001") != std::string::npos);
  CHECK(t15.str().find("intercepts included") != std::string::npos);
  CHECK(rows15[1].find(" -") != std::string::npos);

  auto boundary = synthetic_report(false);
  boundary.result.independence_boundary = true;
  std::ostringstream tb;
  write_fit_table(tb, boundary);
  CHECK(table_rows(tb.str())[0].find("(suppressed)") != std::string::npos);
}

TEST_CASE("cli: argument and input errors exit with 2") {
  TempDir dir;
  const std::string prefix = (dir.path / "out").string();
  std::string err;
  CHECK(run({"fit", "--data", (dir.path / "missing.csv").string(), "--out", prefix}, nullptr, &err) == kExitInputError);
  CHECK(err.find("cannot open") != std::string::npos);
  CHECK(fs::is_empty(dir.path));
  CHECK(run({}) == kExitInputError);
  CHECK(run({"frobnicate"}) == kExitInputError);
  CHECK(run({"fit"}) == kExitInputError);
  CHECK(run({"fit", "--data", "x.csv", "--format", "xml"}) == kExitInputError);
  CHECK(run({"validate", "--tol-scale", "-1"}) == kExitInputError);
  CHECK(run({"simulate", "--scenario", (dir.path / "none.txt").string(), "--out", prefix}) == kExitInputError);
  CHECK(fs::is_empty(dir.path));
  std::string help;
  CHECK(run({"--help"}, &help) == kExitOk);
  CHECK(help.find("simulate") != std::string::npos);
}

TEST_CASE("cli: validate fails when tolerances are tightened past reach") {
  std::string out;
  CHECK(run({"validate", "--mc-samples", "20000", "--tol-scale", "1e-14"}, &out) == kExitValidationFailure);
  CHECK(out.find("FAIL") != std::string::npos);
  CHECK(out.find("oracles passed") != std::string::npos);
}

TEST_CASE("cli: simulate output is byte-identical across runs and worker counts") {
  TempDir dir;
  {
    std::ofstream(dir.path / "scenario.txt") << kScenario;
  }
  const std::string scenario = (dir.path / "scenario.txt").string();
  const std::string a = (dir.path / "a").string(), b = (dir.path / "b").string(), c = (dir.path / "c").string();
  std::string summary;
  REQUIRE(run({"simulate", "--scenario", scenario, "--out", a}, &summary) == kExitOk);
  REQUIRE(run({"simulate", "--scenario", scenario, "--out", b}) == kExitOk);
  REQUIRE(run({"simulate", "--scenario", scenario, "--out", c, "--workers", "3"}) == kExitOk);
  CHECK(summary.find("subjects 120") != std::string::npos);
  for (const char* ext : {".csv", ".truth.txt", ".summary.txt"}) {
    CHECK(slurp(a + ext) == slurp(b + ext));
    CHECK(slurp(a + ext) == slurp(c + ext));
  }
  const std::string d = (dir.path / "d").string();
  REQUIRE(run({"simulate", "--scenario", scenario, "--out", d, "--seed", "5"}) == kExitOk);
  CHECK(slurp(a + ".csv") != slurp(d + ".csv"));
  CHECK(slurp(d + ".truth.txt").find("seed = 5") != std::string::npos);
}
