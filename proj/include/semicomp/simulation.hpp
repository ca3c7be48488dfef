#pragma once

// Data generation from the trivariate Clayton-Weibull model.
//
// Copula draws use the gamma-frailty construction with alpha = theta - 1:
//   V ~ Gamma(1/alpha, 1),  E_i ~ Exp(1),  U_i = (1 + E_i / V)^{-1/alpha}.
// Every row (subject) owns a Mersenne-Twister stream seeded from
// splitmix64(seed, row), so output does not depend on evaluation order.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/copula.hpp"
#include "semicomp/likelihood.hpp"
#include "semicomp/subject.hpp"

namespace semicomp {

struct CovariateGenerator {
  double age_min = 20.0;
  double age_max = 60.0;
  double surgery_probability = 0.2;
  double mismatch_min = 0.0;
  double mismatch_max = 3.0;
};

// Administrative censoring when lower == upper, otherwise uniform[lower, upper].
struct Censoring {
  double lower = 100.0;
  double upper = 100.0;
  bool administrative() const { return lower == upper; }
};

struct SimScenario {
  ModelParams params = ModelParams::initial();
  std::size_t n = 100;
  CovariateGenerator covariates;
  Censoring censoring;
  std::uint64_t seed = 1;
  // Redraw latent triples with X3 <= X2 < X1, whose transplant path would put
  // death before transplant.  Off, the triples follow the copula model exactly.
  bool reject_disordered = true;

  void validate() const;
};

// Key-value text, one "key = value [value...]" per line, '#' comments:
//   n, seed, theta, shapes (3), beta1 (2), beta2 (3), beta3 (3), intercept,
//   age (min max), surgery_p, mismatch (min max), censor (c | c1 c2), theta_eps,
//   reject_disordered (true | false)
// With intercept = true, beta lists carry the intercept first.
SimScenario parse_scenario(std::istream& in);
SimScenario load_scenario(const std::string& path);
void write_scenario(std::ostream& out, const SimScenario& s);

// Derived 64-bit seed for row `index` of stream `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

// n rows of d survival-uniforms with joint survival copula Clayton(theta).
// theta == 1 gives independent uniforms.
Eigen::MatrixXd sample_clayton_uniforms(double theta, int d, std::size_t n, std::uint64_t seed);

struct LatentSubject {
  long id = 0;
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;
  double censor = 0.0;
  Covariates covariates;
  int redraws = 0;  // latent triples rejected for X3 <= X2 < X1
};

// Subjects may be drawn on `workers` threads; each owns its stream, so the
// output does not depend on the worker count.
std::vector<LatentSubject> sample_trivariate(const SimScenario& scenario, int workers = 1);

// Illness-death reduction of a latent triple under censoring time c.
ObservationCase observe(const LatentSubject& latent, double c);
inline ObservationCase observe(const LatentSubject& latent) { return observe(latent, latent.censor); }

struct SimulatedData {
  std::vector<LatentSubject> latent;
  std::vector<ObservationCase> cases;
};

SimulatedData simulate(const SimScenario& scenario, int workers = 1);

// Day-resolution study records for the observations: durations are rounded up
// to whole days and last-seen dates end on or before the study end.
std::vector<SubjectRecord> to_records(const std::vector<ObservationCase>& cases);

struct McEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Monte Carlo Pr(t < X2 < X3) for the pair model.
McEstimate mc_prob_ordered_tail(double t, const BivariatePaird& pair, std::size_t n, std::uint64_t seed);

}  // namespace semicomp
