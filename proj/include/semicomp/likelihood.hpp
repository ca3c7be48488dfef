#pragma once

// Four-case semi-competing-risks log-likelihood for the trivariate
// Clayton-Weibull model.
//
//   case 1  death before transplant       log f1(x1)
//   case 2  transplant, then death        log f23(x2, x3)
//   case 3  transplant, then censored     log[-dS23/dx2](x2, x3)
//   case 4  censored before any event     log[S1(t) + S23(t, t) + int_t^inf dS23/dx3|diag]
//
// X1 is linked to (age, surgery); X2 and X3 to (age, surgery, mismatch).

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/copula.hpp"
#include "semicomp/integrate.hpp"
#include "semicomp/marginals.hpp"
#include "semicomp/subject.hpp"

namespace semicomp {

enum class CaseLabel { DeathBeforeTransplant = 1, TransplantThenDeath = 2, TransplantCensored = 3, FullyCensored = 4 };

const char* case_name(CaseLabel label);
int case_index(CaseLabel label);  // 0..3

struct Covariates {
  double age = 0.0;
  double surgery = 0.0;
  std::optional<double> mismatch;

  Eigen::Vector2d first_link() const { return {age, surgery}; }
  Eigen::Vector3d transplant_link() const;  // throws DomainError when mismatch is absent
};

struct ObservationCase {
  long id = 0;
  CaseLabel label = CaseLabel::FullyCensored;
  std::optional<double> x1;
  std::optional<double> x2;
  std::optional<double> x3;
  Covariates covariates;
  bool mismatch_imputed = false;

  // Censoring time t of a fully censored observation.
  double censor_time() const { return *x1; }
  void validate() const;
};

// Classifies a validated record into one of the four cases.
ObservationCase classify(const SubjectRecord& record);

// Full parameter set.  Natural-scale vector order:
//   theta; X1 [intercept] age surgery, gamma1;
//   X2 [intercept] age surgery mismatch, gamma2; X3 likewise, gamma3.
struct ModelParams {
  Association association{1.5};
  std::array<LinkSpec, 3> links;
  std::array<double, 3> shapes{1.0, 1.0, 1.0};

  // theta = 1.5, all coefficients 0, all shapes 1.
  static ModelParams initial(bool intercept = false, double theta_eps = kDefaultThetaEps);

  bool intercept() const { return links[0].intercept; }
  Eigen::Index parameter_count() const;
  Eigen::VectorXd to_vector() const;
  ModelParams with_vector(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  std::vector<std::string> parameter_names() const;

  WeibullMarginald marginal(int which, const Covariates& cov) const;  // which in {1, 2, 3}
  BivariatePaird pair(const Covariates& cov) const;
  void validate() const;
};

double contrib_case1(const ObservationCase& obs, const ModelParams& params);
double contrib_case2(const ObservationCase& obs, const ModelParams& params);
double contrib_case3(const ObservationCase& obs, const ModelParams& params);
double contrib_case4(const ObservationCase& obs, const ModelParams& params, const QuadratureSpec& q = {});

// Pieces of the case-4 weight, reported for diagnostics and oracles.
struct CensoredTerm {
  double log_survival_1 = 0.0;        // log S1(t)
  double log_pair_diagonal = 0.0;     // log S23(t, t)
  double scaled_tail_integral = 0.0;  // int_t^inf [dS23/dx3]_diag / S23(t, t), in (-1, 0]
  double log_ordered_tail = 0.0;      // log Pr(t < X2 < X3), -inf if not positive
  double log_bracket = 0.0;
  QuadratureResult quadrature;
};

CensoredTerm censored_term(double t, const WeibullMarginald& first, const BivariatePaird& pair,
                           const QuadratureSpec& q = {});

// Pr(t < X2 < X3) = S23(t, t) + int_t^inf [dS23/dx3]_{x2 = x3} dx3.
double ordered_tail_probability(double t, const BivariatePaird& pair, const QuadratureSpec& q = {});

double log_contribution(const ObservationCase& obs, const ModelParams& params, const QuadratureSpec& q = {});

// Sum of per-record contributions.  Records may be evaluated on `workers`
// threads; the reduction order is fixed so the sum does not depend on it.
double log_likelihood(const ModelParams& params, const std::vector<ObservationCase>& data,
                      const QuadratureSpec& q = {}, int workers = 1);

// Central-difference gradient over the natural-scale parameter vector with
// per-coordinate step max(1e-5 |p|, 1e-6).
Eigen::VectorXd numerical_gradient(const ModelParams& params, const std::vector<ObservationCase>& data,
                                   const QuadratureSpec& q = {}, int workers = 1);

}  // namespace semicomp
