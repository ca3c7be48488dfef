#pragma once

// Clayton survival copula in dimensions two and three.
//
// With alpha = theta - 1 > 0 the joint survival of d margins is
//   S = (sum_i S_i^{-alpha} - (d - 1))^{-1/alpha}.
// S_i^{-alpha} is evaluated as exp(alpha * H_i) from the cumulative hazard, so
// every routine below works in the log domain and survives deep tails where the
// plain powers overflow.  theta <= 1 + eps takes the product-copula branch.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "semicomp/errors.hpp"
#include "semicomp/marginals.hpp"

namespace semicomp {

inline constexpr double kDefaultThetaEps = 1e-6;

struct Association {
  double theta = 1.0;
  double eps = kDefaultThetaEps;

  Association() = default;
  explicit Association(double theta_, double eps_ = kDefaultThetaEps) : theta(theta_), eps(eps_) {
    if (!(eps > 0.0)) throw DomainError("Association: eps must be positive");
    if (!(theta >= 1.0) || !std::isfinite(theta)) throw DomainError("Association: theta must lie in [1, inf)");
  }

  bool independent() const { return theta <= 1.0 + eps; }
  double alpha() const { return theta - 1.0; }
};

namespace detail {

// log(sum_i exp(a_i) - (N - 1)) for a_i >= 0.  Equals log1p(sum_i expm1(a_i)),
// which keeps full precision as alpha -> 0; large arguments use log-sum-exp.
template <typename Scalar, std::size_t N>
Scalar log_clayton_sum(const std::array<Scalar, N>& a) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  const Scalar top = *std::max_element(a.begin(), a.end());
  if (top < Scalar(700)) {
    Scalar acc(0);
    for (const auto& v : a) acc += expm1(v);
    return log1p(acc);
  }
  Scalar acc(0);
  for (const auto& v : a) acc += exp(v - top);
  return top + log(acc - Scalar(N - 1) * exp(-top));
}

template <typename Scalar>
Scalar hazard_of(Scalar s, const char* where) {
  using std::log;
  if (!(s > Scalar(0) && s <= Scalar(1)))
    throw DomainError(std::string(where) + ": survival probabilities must lie in (0, 1]");
  return -log(s);
}

}  // namespace detail

// Joint log-survival from marginal cumulative hazards.
template <typename Scalar>
Scalar log_trivariate_survival_from_hazards(Scalar h1, Scalar h2, Scalar h3, const Association& a) {
  if (a.independent()) return -(h1 + h2 + h3);
  const Scalar alpha(a.alpha());
  return -detail::log_clayton_sum<Scalar, 3>({alpha * h1, alpha * h2, alpha * h3}) / alpha;
}

template <typename Scalar>
Scalar log_bivariate_survival_from_hazards(Scalar h2, Scalar h3, const Association& a) {
  if (a.independent()) return -(h2 + h3);
  const Scalar alpha(a.alpha());
  return -detail::log_clayton_sum<Scalar, 2>({alpha * h2, alpha * h3}) / alpha;
}

template <typename Scalar>
Scalar trivariate_survival(Scalar s1, Scalar s2, Scalar s3, const Association& a) {
  using std::exp;
  const Scalar h1 = detail::hazard_of(s1, "trivariate_survival");
  const Scalar h2 = detail::hazard_of(s2, "trivariate_survival");
  const Scalar h3 = detail::hazard_of(s3, "trivariate_survival");
  return exp(log_trivariate_survival_from_hazards(h1, h2, h3, a));
}

template <typename Scalar>
Scalar bivariate_survival(Scalar s2, Scalar s3, const Association& a) {
  using std::exp;
  const Scalar h2 = detail::hazard_of(s2, "bivariate_survival");
  const Scalar h3 = detail::hazard_of(s3, "bivariate_survival");
  return exp(log_bivariate_survival_from_hazards(h2, h3, a));
}

// The (X2, X3) sub-model with covariate links already applied.
template <typename Scalar>
struct BivariatePair {
  WeibullMarginal<Scalar> second;
  WeibullMarginal<Scalar> third;
  Association association;
};

using BivariatePaird = BivariatePair<double>;

template <typename Scalar>
Scalar log_pair_survival(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  return log_bivariate_survival_from_hazards(cumulative_hazard(x2, p.second), cumulative_hazard(x3, p.third),
                                             p.association);
}

template <typename Scalar>
Scalar pair_survival(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  using std::exp;
  return exp(log_pair_survival(x2, x3, p));
}

// log of -dS/dx2 = A^{theta/(1-theta)} S2^{-theta} f2.
template <typename Scalar>
Scalar log_neg_partial_2(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  const Scalar h2 = cumulative_hazard(x2, p.second);
  const Scalar h3 = cumulative_hazard(x3, p.third);
  const Scalar lf2 = log_density(x2, p.second);
  if (p.association.independent()) return lf2 - h3;
  const Scalar theta(p.association.theta);
  const Scalar alpha(p.association.alpha());
  const Scalar log_a = detail::log_clayton_sum<Scalar, 2>({alpha * h2, alpha * h3});
  return -(theta / alpha) * log_a + theta * h2 + lf2;
}

template <typename Scalar>
Scalar neg_partial_2(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  using std::exp;
  return exp(log_neg_partial_2(x2, x3, p));
}

// log of d^2 S / dx2 dx3 = theta A^{(2 theta - 1)/(1 - theta)} (S2 S3)^{-theta} f2 f3.
template <typename Scalar>
Scalar log_bivariate_density(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  using std::log;
  const Scalar lf2 = log_density(x2, p.second);
  const Scalar lf3 = log_density(x3, p.third);
  if (p.association.independent()) return lf2 + lf3;
  const Scalar h2 = cumulative_hazard(x2, p.second);
  const Scalar h3 = cumulative_hazard(x3, p.third);
  const Scalar theta(p.association.theta);
  const Scalar alpha(p.association.alpha());
  const Scalar log_a = detail::log_clayton_sum<Scalar, 2>({alpha * h2, alpha * h3});
  return log(theta) - ((Scalar(2) * theta - Scalar(1)) / alpha) * log_a + theta * (h2 + h3) + lf2 + lf3;
}

template <typename Scalar>
Scalar bivariate_density(Scalar x2, Scalar x3, const BivariatePair<Scalar>& p) {
  using std::exp;
  return exp(log_bivariate_density(x2, x3, p));
}

// log |dS/dx3| on the diagonal x2 = x3 = x.
template <typename Scalar>
Scalar log_neg_diagonal_integrand(Scalar x, const BivariatePair<Scalar>& p) {
  const Scalar h2 = cumulative_hazard(x, p.second);
  const Scalar h3 = cumulative_hazard(x, p.third);
  const Scalar lf3 = log_density(x, p.third);
  if (p.association.independent()) return lf3 - h2;
  const Scalar theta(p.association.theta);
  const Scalar alpha(p.association.alpha());
  const Scalar log_a = detail::log_clayton_sum<Scalar, 2>({alpha * h2, alpha * h3});
  return -(theta / alpha) * log_a + theta * h3 + lf3;
}

// [dS(x2, x3)/dx3] evaluated at x2 = x3 = x; never positive.
template <typename Scalar>
Scalar diagonal_integrand(Scalar x, const BivariatePair<Scalar>& p) {
  using std::exp;
  return -exp(log_neg_diagonal_integrand(x, p));
}

inline double kendall_tau(const Association& a) {
  if (a.independent()) return 0.0;
  return (a.theta - 1.0) / (a.theta + 1.0);
}

}  // namespace semicomp
