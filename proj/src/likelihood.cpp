#include "semicomp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "semicomp/errors.hpp"
#include "semicomp/numdiff.hpp"

namespace semicomp {

const char* case_name(CaseLabel label) {
  switch (label) {
    case CaseLabel::DeathBeforeTransplant: return "death_before_transplant";
    case CaseLabel::TransplantThenDeath: return "transplant_then_death";
    case CaseLabel::TransplantCensored: return "transplant_censored";
    case CaseLabel::FullyCensored: return "fully_censored";
  }
  return "unknown";
}

int case_index(CaseLabel label) { return static_cast<int>(label) - 1; }

Eigen::Vector3d Covariates::transplant_link() const {
  if (!mismatch) throw DomainError("mismatch score required for the X2/X3 links but absent");
  return {age, surgery, *mismatch};
}

void ObservationCase::validate() const {
  auto positive = [](const std::optional<double>& v) { return v && *v > 0.0 && std::isfinite(*v); };
  switch (label) {
    case CaseLabel::DeathBeforeTransplant:
      if (!positive(x1) || x2 || x3) throw DomainError("case 1 requires x1 > 0 and no x2, x3");
      break;
    case CaseLabel::TransplantThenDeath:
    case CaseLabel::TransplantCensored:
      if (x1 || !positive(x2) || !positive(x3) || *x2 > *x3)
        throw DomainError("cases 2 and 3 require 0 < x2 <= x3 and no x1");
      if (!covariates.mismatch) throw DomainError("cases 2 and 3 require a mismatch score");
      break;
    case CaseLabel::FullyCensored:
      if (!positive(x1) || !x2 || !x3 || *x1 != *x2 || *x1 != *x3)
        throw DomainError("case 4 requires x1 = x2 = x3 = t > 0");
      break;
  }
}

ObservationCase classify(const SubjectRecord& record) {
  if (record.last_seen_date < record.accept_date)
    throw InputError("record " + std::to_string(record.id) + ": last-seen date precedes acceptance");
  if (record.transplant_date &&
      (*record.transplant_date < record.accept_date || *record.transplant_date > record.last_seen_date))
    throw InputError("record " + std::to_string(record.id) + ": transplant date outside [accept, last seen]");

  ObservationCase obs;
  obs.id = record.id;
  obs.covariates = Covariates{record.age, static_cast<double>(record.surgery), record.mismatch};
  const auto followup = static_cast<double>(days_between(record.accept_date, record.last_seen_date));
  if (record.transplanted()) {
    obs.label = record.dead ? CaseLabel::TransplantThenDeath : CaseLabel::TransplantCensored;
    obs.x2 = static_cast<double>(days_between(record.accept_date, *record.transplant_date));
    obs.x3 = followup;
  } else if (record.dead) {
    obs.label = CaseLabel::DeathBeforeTransplant;
    obs.x1 = followup;
  } else {
    obs.label = CaseLabel::FullyCensored;
    obs.x1 = obs.x2 = obs.x3 = followup;
  }
  try {
    obs.validate();
  } catch (const DomainError& e) {
    throw InputError("record " + std::to_string(record.id) + ": " + e.what());
  }
  return obs;
}

// ---------------------------------------------------------------------------
// ModelParams

namespace {
const std::vector<std::string> kFirstCovariates = {"age", "surgery"};
const std::vector<std::string> kTransplantCovariates = {"age", "surgery", "mismatch"};
}  // namespace

ModelParams ModelParams::initial(bool intercept, double theta_eps) {
  ModelParams p;
  p.association = Association(1.5, theta_eps);
  p.links[0] = LinkSpec::zeros(kFirstCovariates, intercept);
  p.links[1] = LinkSpec::zeros(kTransplantCovariates, intercept);
  p.links[2] = LinkSpec::zeros(kTransplantCovariates, intercept);
  p.shapes = {1.0, 1.0, 1.0};
  return p;
}

Eigen::Index ModelParams::parameter_count() const {
  return 1 + links[0].parameter_count() + links[1].parameter_count() + links[2].parameter_count() + 3;
}

Eigen::VectorXd ModelParams::to_vector() const {
  Eigen::VectorXd v(parameter_count());
  Eigen::Index k = 0;
  v(k++) = association.theta;
  for (int i = 0; i < 3; ++i) {
    v.segment(k, links[i].parameter_count()) = links[i].coefficients;
    k += links[i].parameter_count();
    v(k++) = shapes[i];
  }
  return v;
}

ModelParams ModelParams::with_vector(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != parameter_count()) throw DomainError("ModelParams: parameter vector has wrong length");
  ModelParams p = *this;
  Eigen::Index k = 0;
  p.association = Association(v(k++), association.eps);
  for (int i = 0; i < 3; ++i) {
    p.links[i].coefficients = v.segment(k, links[i].parameter_count());
    k += links[i].parameter_count();
    p.shapes[i] = v(k++);
  }
  p.validate();
  return p;
}

std::vector<std::string> ModelParams::parameter_names() const {
  std::vector<std::string> names{"theta"};
  for (int i = 0; i < 3; ++i) {
    const std::string prefix = "x" + std::to_string(i + 1) + ".";
    if (links[i].intercept) names.push_back(prefix + "intercept");
    for (const auto& c : links[i].covariate_names) names.push_back(prefix + c);
    names.push_back("gamma" + std::to_string(i + 1));
  }
  return names;
}

void ModelParams::validate() const {
  for (double s : shapes)
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("ModelParams: shapes must be finite and positive");
  for (const auto& l : links)
    if (!l.coefficients.allFinite()) throw DomainError("ModelParams: non-finite coefficient");
}

WeibullMarginald ModelParams::marginal(int which, const Covariates& cov) const {
  switch (which) {
    case 1: return {link_scale(links[0], cov.first_link()), shapes[0]};
    case 2: return {link_scale(links[1], cov.transplant_link()), shapes[1]};
    case 3: return {link_scale(links[2], cov.transplant_link()), shapes[2]};
    default: throw DomainError("ModelParams::marginal: index must be 1, 2 or 3");
  }
}

BivariatePaird ModelParams::pair(const Covariates& cov) const {
  return BivariatePaird{marginal(2, cov), marginal(3, cov), association};
}

// ---------------------------------------------------------------------------
// Contributions

namespace {

void require_label(const ObservationCase& obs, CaseLabel expected) {
  if (obs.label != expected)
    throw DomainError(std::string("contribution for ") + case_name(expected) + " called on " +
                      case_name(obs.label));
}

// Transform length for the tail integral: the local decay length of the
// diagonal integrand at t, capped at the larger marginal scale.
double tail_scale(double t, const BivariatePaird& pair) {
  const double widest = std::max(pair.second.scale, pair.third.scale);
  if (t <= 0.0) return widest;
  const double hazard = std::exp(log_hazard(t, pair.second)) + std::exp(log_hazard(t, pair.third));
  if (!(hazard > 0.0) || !std::isfinite(hazard)) return widest;
  return std::clamp(1.0 / hazard, 1e-6 * widest, widest);
}

}  // namespace

double contrib_case1(const ObservationCase& obs, const ModelParams& params) {
  require_label(obs, CaseLabel::DeathBeforeTransplant);
  return log_density(*obs.x1, params.marginal(1, obs.covariates));
}

double contrib_case2(const ObservationCase& obs, const ModelParams& params) {
  require_label(obs, CaseLabel::TransplantThenDeath);
  return log_bivariate_density(*obs.x2, *obs.x3, params.pair(obs.covariates));
}

double contrib_case3(const ObservationCase& obs, const ModelParams& params) {
  require_label(obs, CaseLabel::TransplantCensored);
  return log_neg_partial_2(*obs.x2, *obs.x3, params.pair(obs.covariates));
}

CensoredTerm censored_term(double t, const WeibullMarginald& first, const BivariatePaird& pair,
                           const QuadratureSpec& q) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("censored_term: t must be finite and >= 0");
  CensoredTerm out;
  out.log_survival_1 = log_survival(t, first);
  out.log_pair_diagonal = log_pair_survival(t, t, pair);

  // The integrand is divided by S23(t, t) so the result is O(1) in deep tails.
  const double log_ref = out.log_pair_diagonal;
  auto scaled = [&](double x) {
    if (x <= 0.0) return 0.0;
    return -std::exp(log_neg_diagonal_integrand(x, pair) - log_ref);
  };
  out.quadrature = tail_integral(t, scaled, q, tail_scale(t, pair));
  out.scaled_tail_integral = require_converged(out.quadrature, "case-4 tail integral");

  const double remaining = 1.0 + out.scaled_tail_integral;
  out.log_ordered_tail = remaining > 0.0 ? out.log_pair_diagonal + std::log1p(out.scaled_tail_integral)
                                         : -std::numeric_limits<double>::infinity();

  const double top = std::max(out.log_survival_1, out.log_pair_diagonal);
  const double bracket =
      std::exp(out.log_survival_1 - top) + std::exp(out.log_pair_diagonal - top) * remaining;
  if (!(bracket > 0.0)) {
    std::ostringstream msg;
    msg << "case-4 weight is not positive at t = " << t << " (log S1 = " << out.log_survival_1
        << ", log S23(t,t) = " << out.log_pair_diagonal << ", scaled integral = " << out.scaled_tail_integral
        << ", quadrature error = " << out.quadrature.error << ")";
    throw DomainError(msg.str());
  }
  out.log_bracket = top + std::log(bracket);
  return out;
}

double ordered_tail_probability(double t, const BivariatePaird& pair, const QuadratureSpec& q) {
  const double log_ref = log_pair_survival(t, t, pair);
  auto scaled = [&](double x) {
    if (x <= 0.0) return 0.0;
    return -std::exp(log_neg_diagonal_integrand(x, pair) - log_ref);
  };
  const double j = require_converged(tail_integral(t, scaled, q, tail_scale(t, pair)), "ordered tail integral");
  return std::exp(log_ref) * (1.0 + j);
}

double contrib_case4(const ObservationCase& obs, const ModelParams& params, const QuadratureSpec& q) {
  require_label(obs, CaseLabel::FullyCensored);
  const double t = obs.censor_time();
  return censored_term(t, params.marginal(1, obs.covariates), params.pair(obs.covariates), q).log_bracket;
}

double log_contribution(const ObservationCase& obs, const ModelParams& params, const QuadratureSpec& q) {
  switch (obs.label) {
    case CaseLabel::DeathBeforeTransplant: return contrib_case1(obs, params);
    case CaseLabel::TransplantThenDeath: return contrib_case2(obs, params);
    case CaseLabel::TransplantCensored: return contrib_case3(obs, params);
    case CaseLabel::FullyCensored: return contrib_case4(obs, params, q);
  }
  throw DomainError("log_contribution: unknown case label");
}

double log_likelihood(const ModelParams& params, const std::vector<ObservationCase>& data,
                      const QuadratureSpec& q, int workers) {
  if (data.empty()) throw DomainError("log_likelihood: empty dataset");
  const std::size_t n = data.size();
  std::vector<double> terms(n, 0.0);

  std::mutex failure_mutex;
  std::size_t failed_index = n;
  std::string failure;
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        terms[i] = log_contribution(data[i], params, q);
        if (!std::isfinite(terms[i])) throw DomainError("non-finite contribution");
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = e.what();
        }
        return;
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::clamp(workers, 1, 256));
  if (threads == 1 || n < 2 * threads) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) pool.emplace_back(run, begin, std::min(n, begin + chunk));
    for (auto& th : pool) th.join();
  }
  if (failed_index < n)
    throw LikelihoodError("record index " + std::to_string(failed_index) + " (id " +
                              std::to_string(data[failed_index].id) + "): " + failure,
                          failed_index);

  double total = 0.0;
  for (double v : terms) total += v;
  return total;
}

Eigen::VectorXd numerical_gradient(const ModelParams& params, const std::vector<ObservationCase>& data,
                                   const QuadratureSpec& q, int workers) {
  const Eigen::VectorXd x = params.to_vector();
  auto f = [&](const Eigen::VectorXd& v) { return log_likelihood(params.with_vector(v), data, q, workers); };
  return central_gradient(f, x, relative_steps(x, 1e-5, 1e-6));
}

}  // namespace semicomp
