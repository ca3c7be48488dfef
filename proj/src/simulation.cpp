#include "semicomp/simulation.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>

#include "semicomp/dataio.hpp"
#include "semicomp/errors.hpp"

namespace semicomp {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

using Engine = boost::random::mt19937_64;

// Uniform on (0, 1), never exactly 0 or 1.
double open_uniform(Engine& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

double standard_exponential(Engine& rng) { return -std::log(open_uniform(rng)); }

// Cumulative hazards -log U_i of one frailty draw; alpha == 0 is independence.
template <int D>
std::array<double, D> clayton_hazards(Engine& rng, double alpha) {
  std::array<double, D> h{};
  if (alpha == 0.0) {
    for (auto& v : h) v = standard_exponential(rng);
    return h;
  }
  boost::random::gamma_distribution<double> frailty(1.0 / alpha, 1.0);
  const double v = frailty(rng);
  for (auto& x : h) x = std::log1p(standard_exponential(rng) / v) / alpha;
  return h;
}

double check_theta(double theta) {
  if (!(theta >= 1.0) || !std::isfinite(theta)) throw DomainError("sampler: theta must lie in [1, inf)");
  return theta - 1.0;
}

// Weibull time with cumulative hazard h.
double weibull_time(double h, const WeibullMarginald& m) { return m.scale * std::pow(h, 1.0 / m.shape); }

}  // namespace

void SimScenario::validate() const {
  if (n < 1) throw DomainError("scenario: n must be >= 1");
  if (!(censoring.lower > 0.0) || !(censoring.upper >= censoring.lower))
    throw DomainError("scenario: censoring times must be positive with lower <= upper");
  if (!(covariates.age_max >= covariates.age_min)) throw DomainError("scenario: age range is empty");
  if (!(covariates.mismatch_max >= covariates.mismatch_min)) throw DomainError("scenario: mismatch range is empty");
  if (!(covariates.surgery_probability >= 0.0 && covariates.surgery_probability <= 1.0))
    throw DomainError("scenario: surgery probability must lie in [0, 1]");
  params.validate();
}

namespace {

std::vector<double> numbers(const std::string& key, const std::string& rest) {
  std::istringstream ss(rest);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InputError("scenario key '" + key + "': not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

SimScenario parse_scenario(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("scenario line " + std::to_string(line_no) + ": expected key = value");
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (kv.count(key)) throw InputError("scenario: duplicate key '" + key + "'");
    kv[key] = line.substr(eq + 1);
  }

  auto take = [&](const std::string& key, std::size_t count, bool required) -> std::vector<double> {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw InputError("scenario: missing key '" + key + "'");
      return {};
    }
    auto v = numbers(key, it->second);
    if (count != 0 && v.size() != count)
      throw InputError("scenario key '" + key + "': expected " + std::to_string(count) + " values");
    kv.erase(it);
    return v;
  };

  auto flag = [&](const std::string& key, bool fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::istringstream ss(it->second);
    std::string word, extra;
    ss >> word >> extra;
    bool value = false;
    if (extra.empty() && (word == "true" || word == "1")) value = true;
    else if (extra.empty() && (word == "false" || word == "0")) value = false;
    else throw InputError("scenario key '" + key + "': expected true or false");
    kv.erase(it);
    return value;
  };
  const bool intercept = flag("intercept", false);
  const bool reject_disordered = flag("reject_disordered", true);
  const double theta_eps = [&] {
    const auto v = take("theta_eps", 1, false);
    return v.empty() ? kDefaultThetaEps : v[0];
  }();

  SimScenario s;
  s.reject_disordered = reject_disordered;
  s.params = ModelParams::initial(intercept, theta_eps);
  const auto n = take("n", 1, true)[0];
  if (!(n >= 1.0) || n != std::floor(n)) throw InputError("scenario: n must be a positive integer");
  s.n = static_cast<std::size_t>(n);
  const auto seed = take("seed", 1, true)[0];
  if (!(seed >= 0.0) || seed != std::floor(seed)) throw InputError("scenario: seed must be a nonnegative integer");
  s.seed = static_cast<std::uint64_t>(seed);

  Eigen::VectorXd v = s.params.to_vector();
  v(0) = take("theta", 1, true)[0];
  const auto shapes = take("shapes", 3, true);
  Eigen::Index k = 1;
  for (int i = 0; i < 3; ++i) {
    const auto count = static_cast<std::size_t>(s.params.links[i].parameter_count());
    const auto beta = take("beta" + std::to_string(i + 1), count, true);
    for (double b : beta) v(k++) = b;
    v(k++) = shapes[static_cast<std::size_t>(i)];
  }
  try {
    s.params = s.params.with_vector(v);
  } catch (const DomainError& e) {
    throw InputError(std::string("scenario: invalid parameters: ") + e.what());
  }

  if (auto age = take("age", 2, false); !age.empty()) s.covariates.age_min = age[0], s.covariates.age_max = age[1];
  if (auto p = take("surgery_p", 1, false); !p.empty()) s.covariates.surgery_probability = p[0];
  if (auto mm = take("mismatch", 2, false); !mm.empty())
    s.covariates.mismatch_min = mm[0], s.covariates.mismatch_max = mm[1];
  const auto censor = take("censor", 0, true);
  if (censor.size() == 1) s.censoring = {censor[0], censor[0]};
  else if (censor.size() == 2) s.censoring = {censor[0], censor[1]};
  else throw InputError("scenario key 'censor': expected one or two values");

  if (!kv.empty()) throw InputError("scenario: unknown key '" + kv.begin()->first + "'");
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  return s;
}

SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path + "'");
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const SimScenario& s) {
  const Eigen::VectorXd v = s.params.to_vector();
  out << "n = " << s.n << '\n' << "seed = " << s.seed << '\n';
  out << "intercept = " << (s.params.intercept() ? "true" : "false") << '\n';
  out << "theta_eps = " << format_double(s.params.association.eps) << '\n';
  out << "theta = " << format_double(v(0)) << '\n';
  out << "shapes = " << format_double(s.params.shapes[0]) << ' ' << format_double(s.params.shapes[1]) << ' '
      << format_double(s.params.shapes[2]) << '\n';
  for (int i = 0; i < 3; ++i) {
    out << "beta" << i + 1 << " =";
    for (Eigen::Index j = 0; j < s.params.links[i].coefficients.size(); ++j)
      out << ' ' << format_double(s.params.links[i].coefficients(j));
    out << '\n';
  }
  out << "age = " << format_double(s.covariates.age_min) << ' ' << format_double(s.covariates.age_max) << '\n';
  out << "surgery_p = " << format_double(s.covariates.surgery_probability) << '\n';
  out << "mismatch = " << format_double(s.covariates.mismatch_min) << ' ' << format_double(s.covariates.mismatch_max)
      << '\n';
  out << "censor = " << format_double(s.censoring.lower);
  if (!s.censoring.administrative()) out << ' ' << format_double(s.censoring.upper);
  out << '\n';
  out << "reject_disordered = " << (s.reject_disordered ? "true" : "false") << '\n';
}

Eigen::MatrixXd sample_clayton_uniforms(double theta, int d, std::size_t n, std::uint64_t seed) {
  const double alpha = check_theta(theta);
  if (d != 2 && d != 3) throw DomainError("sample_clayton_uniforms: dimension must be 2 or 3");
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng(stream_seed(seed, i));
    const auto row = static_cast<Eigen::Index>(i);
    if (d == 2) {
      const auto h = clayton_hazards<2>(rng, alpha);
      u(row, 0) = std::exp(-h[0]);
      u(row, 1) = std::exp(-h[1]);
    } else {
      const auto h = clayton_hazards<3>(rng, alpha);
      for (int j = 0; j < 3; ++j) u(row, j) = std::exp(-h[static_cast<std::size_t>(j)]);
    }
  }
  return u;
}

std::vector<LatentSubject> sample_trivariate(const SimScenario& scenario, int workers) {
  scenario.validate();
  if (workers < 1) throw DomainError("sample_trivariate: workers must be >= 1");
  const ModelParams& p = scenario.params;
  const double alpha = p.association.independent() ? 0.0 : check_theta(p.association.theta);
  const auto& cg = scenario.covariates;
  std::vector<LatentSubject> out(scenario.n);

  auto draw = [&](std::size_t i) {
    Engine rng(stream_seed(scenario.seed, i));
    LatentSubject& s = out[i];
    s.id = static_cast<long>(i) + 1;
    s.covariates.age = cg.age_min + (cg.age_max - cg.age_min) * open_uniform(rng);
    s.covariates.surgery = open_uniform(rng) < cg.surgery_probability ? 1.0 : 0.0;
    s.covariates.mismatch = cg.mismatch_min + (cg.mismatch_max - cg.mismatch_min) * open_uniform(rng);
    const double cu = open_uniform(rng);
    s.censor = scenario.censoring.administrative()
                   ? scenario.censoring.lower
                   : scenario.censoring.lower + (scenario.censoring.upper - scenario.censoring.lower) * cu;
    const WeibullMarginald m1 = p.marginal(1, s.covariates);
    const WeibullMarginald m2 = p.marginal(2, s.covariates);
    const WeibullMarginald m3 = p.marginal(3, s.covariates);
    for (;;) {
      const auto h = clayton_hazards<3>(rng, alpha);
      s.x1 = weibull_time(h[0], m1);
      s.x2 = weibull_time(h[1], m2);
      s.x3 = weibull_time(h[2], m3);
      if (!scenario.reject_disordered || !(s.x2 < s.x1 && s.x3 <= s.x2)) return true;
      if (++s.redraws > 100000) return false;
    }
  };

  const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(workers), scenario.n);
  std::vector<char> ok(scenario.n, 1);
  auto run = [&](std::size_t c) {
    const std::size_t lo = scenario.n * c / chunks, hi = scenario.n * (c + 1) / chunks;
    for (std::size_t i = lo; i < hi; ++i) ok[i] = draw(i) ? 1 : 0;
  };
  if (chunks <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(run, c);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < scenario.n; ++i)
    if (!ok[i]) throw DomainError("sample_trivariate: ordering rejection did not terminate for subject " +
                                  std::to_string(i + 1));
  return out;
}

ObservationCase observe(const LatentSubject& latent, double c) {
  if (!(latent.x1 > 0.0 && latent.x2 > 0.0 && latent.x3 > 0.0 && c > 0.0))
    throw DomainError("observe: times must be positive");
  ObservationCase obs;
  obs.id = latent.id;
  obs.covariates = latent.covariates;
  if (latent.x1 <= std::min(latent.x2, c)) {
    obs.label = CaseLabel::DeathBeforeTransplant;
    obs.x1 = latent.x1;
  } else if (latent.x2 <= c && latent.x3 <= c) {
    obs.label = CaseLabel::TransplantThenDeath;
    obs.x2 = latent.x2;
    obs.x3 = latent.x3;
  } else if (latent.x2 <= c) {
    obs.label = CaseLabel::TransplantCensored;
    obs.x2 = latent.x2;
    obs.x3 = c;
  } else {
    obs.label = CaseLabel::FullyCensored;
    obs.x1 = obs.x2 = obs.x3 = c;
  }
  obs.validate();
  return obs;
}

SimulatedData simulate(const SimScenario& scenario, int workers) {
  SimulatedData out;
  out.latent = sample_trivariate(scenario, workers);
  out.cases.reserve(out.latent.size());
  for (const auto& l : out.latent) out.cases.push_back(observe(l));
  return out;
}

std::vector<SubjectRecord> to_records(const std::vector<ObservationCase>& cases) {
  std::vector<SubjectRecord> out;
  out.reserve(cases.size());
  auto days = [](double x) { return std::chrono::days{static_cast<long>(std::ceil(x))}; };
  for (const auto& c : cases) {
    SubjectRecord r;
    r.id = c.id;
    r.age = c.covariates.age;
    r.surgery = static_cast<int>(c.covariates.surgery);
    double followup = 0.0;
    switch (c.label) {
      case CaseLabel::DeathBeforeTransplant:
        followup = *c.x1;
        r.dead = true;
        break;
      case CaseLabel::TransplantThenDeath:
      case CaseLabel::TransplantCensored:
        followup = *c.x3;
        r.dead = c.label == CaseLabel::TransplantThenDeath;
        r.mismatch = c.covariates.mismatch;
        break;
      case CaseLabel::FullyCensored:
        followup = c.censor_time();
        break;
    }
    r.last_seen_date = kStudyEnd;
    r.accept_date = kStudyEnd - days(followup);
    if (c.x2 && c.label != CaseLabel::FullyCensored) r.transplant_date = r.accept_date + days(*c.x2);
    out.push_back(r);
  }
  return out;
}

McEstimate mc_prob_ordered_tail(double t, const BivariatePaird& pair, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("mc_prob_ordered_tail: need at least one sample");
  const double alpha = pair.association.independent() ? 0.0 : check_theta(pair.association.theta);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng(stream_seed(seed, i));
    const auto h = clayton_hazards<2>(rng, alpha);
    const double x2 = weibull_time(h[0], pair.second);
    const double x3 = weibull_time(h[1], pair.third);
    if (t < x2 && x2 < x3) ++hits;
  }
  McEstimate out;
  out.samples = n;
  out.probability = static_cast<double>(hits) / static_cast<double>(n);
  out.standard_error = std::sqrt(out.probability * (1.0 - out.probability) / static_cast<double>(n));
  return out;
}

}  // namespace semicomp
