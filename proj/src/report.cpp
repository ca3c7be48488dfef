#include "semicomp/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "json.hpp"
#include "semicomp/errors.hpp"

namespace semicomp {

namespace {

using nlohmann::json;

const std::map<std::string, double>& reference_table() {
  static const std::map<std::string, double> table{
      {"theta", 1.677},       {"x1.age", 0.087},      {"x1.surgery", -1.316}, {"gamma1", 0.342},
      {"x2.age", 0.076},      {"x2.surgery", 0.196},  {"x2.mismatch", -0.036}, {"gamma2", 0.733},
      {"x3.age", 0.131},      {"x3.surgery", 1.993},  {"x3.mismatch", 0.340}, {"gamma3", 0.422},
  };
  return table;
}

std::string fixed3(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  // Avoid printing "-0.000".
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

// "x2.mismatch" -> "X2 mismatch", "gamma3" -> "X3 gamma3".
std::string display_name(const std::string& name) {
  if (name == "theta") return "theta";
  if (name.rfind("gamma", 0) == 0) return "X" + name.substr(5) + " " + name;
  const auto dot = name.find('.');
  if (dot == std::string::npos) return name;
  return "X" + name.substr(1, dot - 1) + " " + name.substr(dot + 1);
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
  if (j.is_null()) return std::nan("");
  if (!j.is_number()) throw InputError("fit document: expected a number");
  return j.get<double>();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd read_matrix(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw InputError("fit document: matrix has the wrong shape");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw InputError("fit document: matrix has the wrong shape");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = read_number(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

ExclusionRule parse_rule(const std::string& s) {
  if (s == rule_name(ExclusionRule::ZeroDuration)) return ExclusionRule::ZeroDuration;
  if (s == rule_name(ExclusionRule::MissingMismatch)) return ExclusionRule::MissingMismatch;
  throw InputError("fit document: unknown exclusion rule '" + s + "'");
}

}  // namespace

std::optional<double> reference_value(const std::string& name) {
  const auto& t = reference_table();
  const auto it = t.find(name);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

ModelParams reference_params() {
  const ModelParams layout = ModelParams::initial(false);
  const auto names = layout.parameter_names();
  Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) v(static_cast<Eigen::Index>(i)) = *reference_value(names[i]);
  return layout.with_vector(v);
}

void write_fit_table(std::ostream& out, const FitReport& report) {
  const FitResult& r = report.result;
  const auto& s = report.summary;
  out << "Clayton-Weibull semi-competing risks fit\n";
  out << "data:        " << report.data_path << " (mismatch column '" << report.mismatch_column
      << "', imputation " << report.config.imputation << ")\n";
  out << "records:     " << s.total << " kept of " << report.rows_read << " rows, " << report.excluded.size()
      << " excluded; cases 1-4: " << s.counts[0] << ' ' << s.counts[1] << ' ' << s.counts[2] << ' ' << s.counts[3]
      << '\n';
  if (report.config.intercept)
    out << "layout:      intercepts included; reference values do not apply to this configuration\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.4f", r.log_likelihood);
  out << "log-lik:     " << buf;
  if (report.reference_log_likelihood) {
    std::snprintf(buf, sizeof buf, "%.4f", *report.reference_log_likelihood);
    out << " (at reference values: " << buf << ")";
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "%.3g", r.convergence.gradient_norm);
  out << "converged:   " << (r.convergence.converged ? "yes" : "NO") << " (gradient norm " << buf << ", "
      << r.convergence.iterations << " iterations, " << r.convergence.restarts_used << " starts)\n";
  for (const auto& note : r.convergence.notes) out << "note:        " << note << '\n';
  out << '\n';

  out << pad("Parameter", 16, false) << pad("Estimate", 10, true) << "   " << pad("95% CI", 22, false)
      << pad("Reference", 10, true) << pad("|Dev|", 9, true) << '\n';
  const Eigen::VectorXd est = r.estimates.to_vector();
  for (std::size_t i = 0; i < r.parameter_names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const std::string& name = r.parameter_names[i];
    std::string ci;
    if (j == 0 && r.independence_boundary) ci = "(suppressed)";
    else if (r.ci95[i].flagged) ci = "(n/a)";
    else ci = "(" + fixed3(r.ci95[i].lower) + ", " + fixed3(r.ci95[i].upper) + ")";
    const auto ref = report.config.intercept ? std::nullopt : reference_value(name);
    const std::string ref_text = ref ? fixed3(ref.value()) : "-";
    const std::string dev_text = ref ? fixed3(std::abs(est(j) - ref.value())) : "-";
    out << pad(display_name(name), 16, false) << pad(fixed3(est(j)), 10, true) << "   " << pad(ci, 22, false)
        << pad(ref_text, 10, true) << pad(dev_text, 9, true) << '\n';
  }
}

std::string fit_to_json(const FitReport& report) {
  const FitResult& r = report.result;
  const FitConfig& c = report.config;
  json doc;

  json config;
  config["command"] = "fit";
  config["data"] = report.data_path;
  config["mismatch_column"] = report.mismatch_column;
  config["intercept"] = c.intercept;
  config["theta_eps"] = c.theta_eps;
  config["quadrature"] = {{"abs_tol", c.quadrature.abs_tol},
                          {"rel_tol", c.quadrature.rel_tol},
                          {"max_subdivisions", c.quadrature.max_subdivisions}};
  config["restarts"] = c.restarts;
  config["seed"] = c.seed;
  config["simplex_evaluations"] = c.simplex_evaluations;
  config["imputation"] = c.imputation;
  json starts = json::array();
  for (const auto& v : c.extra_starts) starts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  config["extra_starts"] = starts;
  doc["config"] = config;

  json records;
  records["rows_read"] = report.rows_read;
  json issues = json::array();
  for (const auto& i : report.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
  records["parse_issues"] = issues;
  json excluded = json::array();
  for (const auto& e : report.excluded) excluded.push_back({{"id", e.id}, {"rule", rule_name(e.rule)}});
  records["excluded"] = excluded;
  const auto& s = report.summary;
  records["kept"] = s.total;
  records["case_counts"] = s.counts;
  records["age_range"] = {number(s.age_min), number(s.age_max)};
  records["mismatch_range"] = {number(s.mismatch_min), number(s.mismatch_max)};
  records["imputed"] = s.imputed;
  records["imputed_value"] = number(s.imputed_value);
  doc["records"] = records;

  doc["reference_layout"] = !c.intercept;
  const Eigen::VectorXd est = r.estimates.to_vector();
  json params = json::array();
  for (std::size_t i = 0; i < r.parameter_names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    json p;
    p["name"] = r.parameter_names[i];
    p["estimate"] = number(est(j));
    p["standard_error"] = number(r.standard_errors(j));
    p["ci95"] = {number(r.ci95[i].lower), number(r.ci95[i].upper)};
    p["ci_flagged"] = r.ci95[i].flagged;
    const auto ref = c.intercept ? std::nullopt : reference_value(r.parameter_names[i]);
    p["reference"] = ref ? json(*ref) : json(nullptr);
    params.push_back(std::move(p));
  }
  doc["parameters"] = params;
  doc["covariance"] = matrix_json(r.covariance);
  doc["hessian"] = matrix_json(r.hessian);
  doc["log_likelihood"] = number(r.log_likelihood);
  doc["reference_log_likelihood"] =
      report.reference_log_likelihood ? number(*report.reference_log_likelihood) : json(nullptr);

  const Convergence& v = r.convergence;
  doc["convergence"] = {{"converged", v.converged},
                        {"iterations", v.iterations},
                        {"evaluations", v.evaluations},
                        {"gradient_norm", number(v.gradient_norm)},
                        {"natural_gradient_norm", number(v.natural_gradient_norm)},
                        {"scaled_gradient_max", number(v.scaled_gradient_max)},
                        {"last_rel_change", number(v.last_rel_change)},
                        {"restarts_used", v.restarts_used},
                        {"notes", v.notes}};
  doc["covariance_pseudo_inverse"] = r.covariance_pseudo_inverse;
  doc["independence_boundary"] = r.independence_boundary;
  json lls = json::array();
  for (double ll : r.start_log_likelihoods) lls.push_back(number(ll));
  doc["start_log_likelihoods"] = lls;
  return doc.dump(2) + "\n";
}

FitReport fit_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("fit document: ") + e.what());
  }
  FitReport out;
  try {
    const json& config = doc.at("config");
    out.data_path = config.at("data").get<std::string>();
    out.mismatch_column = config.at("mismatch_column").get<std::string>();
    FitConfig& c = out.config;
    c.intercept = config.at("intercept").get<bool>();
    c.theta_eps = config.at("theta_eps").get<double>();
    c.quadrature.abs_tol = config.at("quadrature").at("abs_tol").get<double>();
    c.quadrature.rel_tol = config.at("quadrature").at("rel_tol").get<double>();
    c.quadrature.max_subdivisions = config.at("quadrature").at("max_subdivisions").get<int>();
    c.restarts = config.at("restarts").get<int>();
    c.seed = config.at("seed").get<std::uint64_t>();
    c.simplex_evaluations = config.at("simplex_evaluations").get<int>();
    c.imputation = config.at("imputation").get<std::string>();
    for (const auto& s : config.at("extra_starts")) {
      const auto v = s.get<std::vector<double>>();
      c.extra_starts.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }

    const json& records = doc.at("records");
    out.rows_read = records.at("rows_read").get<std::size_t>();
    for (const auto& i : records.at("parse_issues"))
      out.issues.push_back({i.at("line").get<std::size_t>(), i.at("message").get<std::string>()});
    for (const auto& e : records.at("excluded"))
      out.excluded.push_back({e.at("id").get<long>(), parse_rule(e.at("rule").get<std::string>())});
    out.summary.total = records.at("kept").get<std::size_t>();
    out.summary.counts = records.at("case_counts").get<std::array<std::size_t, 4>>();
    out.summary.age_min = read_number(records.at("age_range").at(0));
    out.summary.age_max = read_number(records.at("age_range").at(1));
    out.summary.mismatch_min = read_number(records.at("mismatch_range").at(0));
    out.summary.mismatch_max = read_number(records.at("mismatch_range").at(1));
    out.summary.imputed = records.at("imputed").get<std::size_t>();
    out.summary.imputed_value = read_number(records.at("imputed_value"));

    FitResult& r = out.result;
    const ModelParams layout = ModelParams::initial(c.intercept, c.theta_eps);
    const json& params = doc.at("parameters");
    const Eigen::Index n = layout.parameter_count();
    if (static_cast<Eigen::Index>(params.size()) != n) throw InputError("fit document: wrong parameter count");
    Eigen::VectorXd est(n);
    r.standard_errors.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const json& p = params[static_cast<std::size_t>(j)];
      r.parameter_names.push_back(p.at("name").get<std::string>());
      est(j) = read_number(p.at("estimate"));
      r.standard_errors(j) = read_number(p.at("standard_error"));
      r.ci95.push_back({read_number(p.at("ci95").at(0)), read_number(p.at("ci95").at(1)),
                        p.at("ci_flagged").get<bool>()});
    }
    if (r.parameter_names != layout.parameter_names()) throw InputError("fit document: parameter names do not match");
    r.estimates = layout.with_vector(est);
    r.covariance = read_matrix(doc.at("covariance"), n);
    r.hessian = read_matrix(doc.at("hessian"), n);
    r.log_likelihood = read_number(doc.at("log_likelihood"));
    if (!doc.at("reference_log_likelihood").is_null())
      out.reference_log_likelihood = read_number(doc.at("reference_log_likelihood"));

    const json& v = doc.at("convergence");
    r.convergence.converged = v.at("converged").get<bool>();
    r.convergence.iterations = v.at("iterations").get<int>();
    r.convergence.evaluations = v.at("evaluations").get<int>();
    r.convergence.gradient_norm = read_number(v.at("gradient_norm"));
    r.convergence.natural_gradient_norm = read_number(v.at("natural_gradient_norm"));
    r.convergence.scaled_gradient_max = read_number(v.at("scaled_gradient_max"));
    r.convergence.last_rel_change = read_number(v.at("last_rel_change"));
    r.convergence.restarts_used = v.at("restarts_used").get<int>();
    r.convergence.notes = v.at("notes").get<std::vector<std::string>>();
    r.covariance_pseudo_inverse = doc.at("covariance_pseudo_inverse").get<bool>();
    r.independence_boundary = doc.at("independence_boundary").get<bool>();
    for (const auto& ll : doc.at("start_log_likelihoods")) r.start_log_likelihoods.push_back(read_number(ll));

    r.metadata.imputation = c.imputation;
    r.metadata.case_counts = out.summary.counts;
    r.metadata.quadrature = c.quadrature;
    r.metadata.theta_eps = c.theta_eps;
  } catch (const json::exception& e) {
    throw InputError(std::string("fit document: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("fit document: ") + e.what());
  }
  return out;
}

}  // namespace semicomp
