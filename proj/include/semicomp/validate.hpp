#pragma once

// Cross-module oracle suite: analytic special cases, quadrature and
// finite-difference consistency, and Monte-Carlo checks of the sampler
// against the closed forms.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/copula.hpp"
#include "semicomp/integrate.hpp"

namespace semicomp {

struct OracleResult {
  std::string name;
  double observed = 0.0;
  double expected = 0.0;
  double deviation = 0.0;  // the quantity compared against the tolerance
  double tolerance = 0.0;
  bool passed = false;
};

struct ValidateOptions {
  std::uint64_t seed = 20240601;
  double tol_scale = 1.0;  // multiplies every tolerance; < 1 tightens
  std::size_t mc_samples = 1000000;
};

std::vector<OracleResult> run_oracles(const ValidateOptions& options = {});
// One line per oracle; fixed formatting so equal results give equal bytes.
void write_oracle_report(std::ostream& out, const std::vector<OracleResult>& results);

// Kendall's tau of two columns (Knight's O(n log n) algorithm, no ties assumed).
double kendall_tau_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform_statistic(Eigen::VectorXd sample);
// Asymptotic 1% critical value of the one-sample KS statistic.
double ks_critical_1pct(std::size_t n);

// Pr(t < X2 < X3) by iterated quadrature of the bivariate density.
double ordered_tail_by_density(double t, const BivariatePaird& pair, const QuadratureSpec& q = {});
// Double integral of the bivariate density over the positive quadrant.
double bivariate_density_mass(const BivariatePaird& pair, const QuadratureSpec& q = {});

}  // namespace semicomp
