#pragma once

// Maximum-likelihood fitting with Hessian-based Wald intervals.
//
// The optimizer works in unconstrained coordinates
//   theta = 1 + eps + exp(phi),  gamma_i = exp(g_i),  beta unchanged,
// while the Hessian and intervals are on the natural scale.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/integrate.hpp"
#include "semicomp/likelihood.hpp"

namespace semicomp {

struct FitConfig {
  bool intercept = false;
  double theta_eps = kDefaultThetaEps;
  QuadratureSpec quadrature{};
  int restarts = 4;            // jittered restarts in addition to the default start
  std::uint64_t seed = 20240601;
  int workers = 1;
  int simplex_evaluations = 3000;  // budget per start
  std::vector<Eigen::VectorXd> extra_starts;  // natural-scale vectors
  std::string imputation = "zero";            // echoed into the result metadata
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool flagged = false;  // negative or non-finite variance
};

struct Convergence {
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = 0.0;          // optimizer coordinates
  double natural_gradient_norm = 0.0;  // natural-scale parameters
  double scaled_gradient_max = 0.0;    // max |gradient_j * SE_j|
  double last_rel_change = 0.0;
  int restarts_used = 0;
  std::vector<std::string> notes;
};

struct FitMetadata {
  std::string imputation;
  std::array<std::size_t, 4> case_counts{};
  QuadratureSpec quadrature{};
  double theta_eps = kDefaultThetaEps;
};

struct FitResult {
  ModelParams estimates;
  std::vector<std::string> parameter_names;
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd standard_errors;
  std::vector<Interval> ci95;
  double log_likelihood = 0.0;
  Convergence convergence;
  bool covariance_pseudo_inverse = false;
  bool independence_boundary = false;
  std::vector<double> start_log_likelihoods;  // -inf for rejected starts
  FitMetadata metadata;
};

// Unconstrained optimizer coordinates for the parameters.
Eigen::VectorXd to_unconstrained(const ModelParams& params);
ModelParams from_unconstrained(const Eigen::VectorXd& z, const ModelParams& layout);

FitResult fit(const std::vector<ObservationCase>& data, const FitConfig& config = {});

// Symmetrized central-difference Hessian of the log-likelihood on the natural
// scale, step max(1e-4 |p|, 1e-4).  `free` selects the parameters to vary
// (empty = all); the returned matrix is over the selected ones.
Eigen::MatrixXd hessian(const ModelParams& params, const std::vector<ObservationCase>& data,
                        const QuadratureSpec& q = {}, int workers = 1, const std::vector<Eigen::Index>& free = {});

// Inverse of -H, falling back to an eigenvalue pseudo-inverse.
struct CovarianceResult {
  Eigen::MatrixXd covariance;
  bool pseudo_inverse = false;
};
CovarianceResult covariance_from_hessian(const Eigen::MatrixXd& h);

// estimate +/- z_level * sqrt(diag(covariance)); not clipped to the domain.
std::vector<Interval> wald_intervals(const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance,
                                     double level = 0.95);
double normal_two_sided_quantile(double level);

}  // namespace semicomp
