#pragma once

// Weibull marginal survival functions and the log-linear scale link.
//
// A marginal with scale lambda and shape gamma has cumulative hazard
// H(x) = (x / lambda)^gamma and survival S(x) = exp(-H(x)).  All functions are
// templated on the scalar type so they compose with Eigen expressions.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/errors.hpp"

namespace semicomp {

template <typename Scalar>
struct WeibullMarginal {
  Scalar scale;
  Scalar shape;

  WeibullMarginal(Scalar scale_, Scalar shape_) : scale(scale_), shape(shape_) {
    using std::isfinite;
    if (!(scale > Scalar(0)) || !(shape > Scalar(0)) || !isfinite(scale) || !isfinite(shape))
      throw DomainError("WeibullMarginal: scale and shape must be finite and positive");
  }
};

using WeibullMarginald = WeibullMarginal<double>;

namespace detail {
template <typename Scalar>
void require_nonnegative(Scalar x, const char* where) {
  if (!(x >= Scalar(0))) throw DomainError(std::string(where) + ": time must be >= 0");
}
}  // namespace detail

template <typename Scalar>
Scalar cumulative_hazard(Scalar x, const WeibullMarginal<Scalar>& m) {
  using std::pow;
  detail::require_nonnegative(x, "cumulative_hazard");
  return pow(x / m.scale, m.shape);
}

template <typename Scalar>
Scalar log_survival(Scalar x, const WeibullMarginal<Scalar>& m) {
  return -cumulative_hazard(x, m);
}

template <typename Scalar>
Scalar survival(Scalar x, const WeibullMarginal<Scalar>& m) {
  using std::exp;
  return exp(log_survival(x, m));
}

// log f(x) = log(gamma/lambda) + (gamma - 1) log(x/lambda) - (x/lambda)^gamma
template <typename Scalar>
Scalar log_density(Scalar x, const WeibullMarginal<Scalar>& m) {
  using std::exp;
  using std::log;
  if (!(x > Scalar(0))) throw DomainError("log_density: time must be > 0");
  const Scalar z = log(x / m.scale);
  return log(m.shape / m.scale) + (m.shape - Scalar(1)) * z - exp(m.shape * z);
}

template <typename Scalar>
Scalar density(Scalar x, const WeibullMarginal<Scalar>& m) {
  using std::exp;
  detail::require_nonnegative(x, "density");
  if (x == Scalar(0)) {
    if (m.shape < Scalar(1)) throw DomainError("density: diverges at 0 for shape < 1");
    return m.shape == Scalar(1) ? Scalar(1) / m.scale : Scalar(0);
  }
  return exp(log_density(x, m));
}

template <typename Scalar>
Scalar log_hazard(Scalar x, const WeibullMarginal<Scalar>& m) {
  using std::log;
  if (!(x > Scalar(0))) throw DomainError("log_hazard: time must be > 0");
  return log(m.shape / m.scale) + (m.shape - Scalar(1)) * log(x / m.scale);
}

// Inverse of the survival function: the time x with S(x) = u.
template <typename Scalar>
Scalar quantile(Scalar u, const WeibullMarginal<Scalar>& m) {
  using std::log;
  using std::pow;
  if (!(u > Scalar(0) && u < Scalar(1))) throw DomainError("quantile: u must lie in (0, 1)");
  return m.scale * pow(-log(u), Scalar(1) / m.shape);
}

// Regression coefficients for lambda = exp(beta' z), with z optionally
// prefixed by a constant 1 when the intercept flag is set.
struct LinkSpec {
  Eigen::VectorXd coefficients;
  std::vector<std::string> covariate_names;
  bool intercept = false;

  LinkSpec() = default;
  LinkSpec(Eigen::VectorXd coefficients_, std::vector<std::string> names, bool intercept_ = false)
      : coefficients(std::move(coefficients_)), covariate_names(std::move(names)), intercept(intercept_) {
    if (coefficients.size() != parameter_count())
      throw DomainError("LinkSpec: coefficient count must equal covariates plus intercept");
  }

  Eigen::Index covariate_count() const { return static_cast<Eigen::Index>(covariate_names.size()); }
  Eigen::Index parameter_count() const { return covariate_count() + (intercept ? 1 : 0); }

  // Zero coefficients for the given covariates.
  static LinkSpec zeros(std::vector<std::string> names, bool intercept = false) {
    const auto n = static_cast<Eigen::Index>(names.size()) + (intercept ? 1 : 0);
    return LinkSpec(Eigen::VectorXd::Zero(n), std::move(names), intercept);
  }
};

template <typename Derived>
double link_linear_predictor(const LinkSpec& spec, const Eigen::MatrixBase<Derived>& covariates) {
  if (covariates.size() != spec.covariate_count())
    throw DomainError("link_scale: covariate vector does not match the link layout");
  if (!covariates.allFinite()) throw DomainError("link_scale: missing or non-finite covariate");
  double eta = spec.coefficients.tail(spec.covariate_count()).dot(covariates.template cast<double>());
  if (spec.intercept) eta += spec.coefficients(0);
  return eta;
}

template <typename Derived>
double link_scale(const LinkSpec& spec, const Eigen::MatrixBase<Derived>& covariates) {
  return std::exp(link_linear_predictor(spec, covariates));
}

}  // namespace semicomp
