#include "semicomp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "semicomp/dataio.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/estimation.hpp"
#include "semicomp/report.hpp"
#include "semicomp/simulation.hpp"
#include "semicomp/validate.hpp"

namespace semicomp {

namespace {

struct FitArgs {
  std::string data;
  std::string mismatch_column = "mismatch";
  bool intercept = false;
  double theta_eps = kDefaultThetaEps;
  double quad_abs_tol = QuadratureSpec{}.abs_tol;
  double quad_rel_tol = QuadratureSpec{}.rel_tol;
  int restarts = FitConfig{}.restarts;
  std::uint64_t seed = FitConfig{}.seed;
  int workers = 1;
  std::string out;
  std::string format = "table";
  std::string imputation = "zero";
};

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1;
};

struct ValidateArgs {
  std::uint64_t seed = ValidateOptions{}.seed;
  double tol_scale = 1.0;
  std::size_t mc_samples = ValidateOptions{}.mc_samples;
  std::string out;
};

// Files are written only after every output has been rendered.
void write_files(const std::vector<std::pair<std::string, std::string>>& files) {
  for (const auto& [path, text] : files) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("write failed for '" + path + "'");
  }
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  ParseOptions popts;
  popts.mismatch_column = a.mismatch_column;
  const ParseResult parsed = parse_records_file(a.data, popts);
  for (const auto& issue : parsed.issues) err << a.data << ":" << issue.line << ": " << issue.message << '\n';
  const FilterResult filtered = filter_records(parsed.records);
  const Dataset ds = build_dataset(filtered.kept, parse_imputation(a.imputation));
  if (ds.cases.empty()) throw InputError("no records left after filtering");

  FitReport report;
  report.data_path = a.data;
  report.mismatch_column = a.mismatch_column;
  report.rows_read = parsed.rows_read;
  report.issues = parsed.issues;
  report.excluded = filtered.excluded;
  report.summary = ds.summary;
  FitConfig& c = report.config;
  c.intercept = a.intercept;
  c.theta_eps = a.theta_eps;
  c.quadrature.abs_tol = a.quad_abs_tol;
  c.quadrature.rel_tol = a.quad_rel_tol;
  c.restarts = a.restarts;
  c.seed = a.seed;
  c.workers = a.workers;
  c.imputation = a.imputation;

  try {
    report.result = fit(ds.cases, c);
  } catch (const DomainError& e) {
    throw InputError(std::string("fit: ") + e.what());
  }
  if (!a.intercept) {
    try {
      report.reference_log_likelihood = log_likelihood(reference_params(), ds.cases, c.quadrature, c.workers);
    } catch (const std::exception& e) {
      err << "log-likelihood at reference values failed: " << e.what() << '\n';
    }
  }

  std::ostringstream table;
  write_fit_table(table, report);
  const std::string json = fit_to_json(report);
  std::ostringstream exclusions;
  write_exclusion_log(exclusions, filtered.excluded);

  const bool want_table = a.format == "table" || a.format == "both";
  const bool want_json = a.format == "json" || a.format == "both";
  if (a.out.empty()) {
    if (want_table) out << table.str();
    if (want_table && want_json) out << '\n';
    if (want_json) out << json;
  } else {
    std::vector<std::pair<std::string, std::string>> files;
    if (want_table) files.emplace_back(a.out + ".txt", table.str());
    if (want_json) files.emplace_back(a.out + ".json", json);
    files.emplace_back(a.out + ".exclusions.tsv", exclusions.str());
    write_files(files);
    out << "wrote " << a.out << ".*: " << report.result.parameter_names.size() << " parameters, log-likelihood "
        << format_double(report.result.log_likelihood) << '\n';
  }
  if (!report.result.convergence.converged) {
    err << "fit did not converge (gradient norm " << report.result.convergence.gradient_norm << ")\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

void write_case_summary(std::ostream& out, const CaseSummary& s) {
  out << "subjects " << s.total << '\n';
  for (int k = 0; k < 4; ++k)
    out << "case " << k + 1 << ' ' << case_name(static_cast<CaseLabel>(k + 1)) << ' ' << s.counts[k] << '\n';
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimScenario sc = load_scenario(a.scenario);
  if (a.seed_given) sc.seed = a.seed;
  const SimulatedData sim = simulate(sc, a.workers);
  const std::vector<SubjectRecord> records = to_records(sim.cases);
  // The written dataset carries the day-resolution durations of its records.
  std::vector<ObservationCase> cases;
  cases.reserve(records.size());
  for (const auto& r : records) cases.push_back(classify(r));

  std::ostringstream data, truth, summary;
  write_dataset(data, records, cases);
  write_scenario(truth, sc);
  write_case_summary(summary, summarize(cases));
  write_files({{a.out + ".csv", data.str()}, {a.out + ".truth.txt", truth.str()}, {a.out + ".summary.txt", summary.str()}});
  out << summary.str();
  return kExitOk;
}

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  ValidateOptions o;
  o.seed = a.seed;
  o.tol_scale = a.tol_scale;
  o.mc_samples = a.mc_samples;
  const auto results = run_oracles(o);
  std::ostringstream report;
  write_oracle_report(report, results);
  if (a.out.empty()) out << report.str();
  else {
    write_files({{a.out, report.str()}});
    out << report.str();
  }
  const bool ok = std::all_of(results.begin(), results.end(), [](const OracleResult& r) { return r.passed; });
  return ok ? kExitOk : kExitValidationFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clayton-Weibull semi-competing risks: fit, simulate, validate", "semicomp"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a study data file");
  fit_cmd->add_option("--data", fa.data, "Input CSV")->required();
  fit_cmd->add_option("--mismatch-column", fa.mismatch_column, "Column holding the mismatch score");
  fit_cmd->add_flag("--intercept", fa.intercept, "Add an intercept to each scale link");
  fit_cmd->add_option("--theta-eps", fa.theta_eps, "Independence margin above theta = 1")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--quad-abs-tol", fa.quad_abs_tol, "Quadrature absolute tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--quad-rel-tol", fa.quad_rel_tol, "Quadrature relative tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--restarts", fa.restarts, "Jittered restarts")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fa.seed, "Seed for restart jitter");
  fit_cmd->add_option("--workers", fa.workers, "Threads for likelihood evaluation")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fa.out, "Output prefix (PREFIX.txt, PREFIX.json, PREFIX.exclusions.tsv)");
  fit_cmd->add_option("--format", fa.format, "table, json or both")->check(CLI::IsMember({"table", "json", "both"}));
  fit_cmd->add_option("--imputation", fa.imputation, "Mismatch for untransplanted subjects: zero or mean")
      ->check(CLI::IsMember({"zero", "mean"}));

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a dataset from a scenario file");
  sim_cmd->add_option("--scenario", sa.scenario, "Scenario file")->required();
  sim_cmd->add_option("--out", sa.out, "Output prefix (PREFIX.csv, PREFIX.truth.txt, PREFIX.summary.txt)")->required();
  auto* seed_opt = sim_cmd->add_option("--seed", sa.seed, "Override the scenario seed");
  sim_cmd->add_option("--workers", sa.workers, "Threads for sampling")->check(CLI::PositiveNumber);

  ValidateArgs va;
  auto* val_cmd = app.add_subcommand("validate", "Run the oracle suite");
  val_cmd->add_option("--seed", va.seed, "Seed for random draws");
  val_cmd->add_option("--tol-scale", va.tol_scale, "Multiply every tolerance (< 1 tightens)")->check(CLI::PositiveNumber);
  val_cmd->add_option("--mc-samples", va.mc_samples, "Monte Carlo samples per configuration")
      ->check(CLI::Range(std::size_t{10000}, std::size_t{100000000}));
  val_cmd->add_option("--out", va.out, "Also write the report to this file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitInputError;
  }
  sa.seed_given = seed_opt->count() > 0;

  try {
    if (fit_cmd->parsed()) return cmd_fit(fa, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sa, out);
    return cmd_validate(va, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace semicomp
