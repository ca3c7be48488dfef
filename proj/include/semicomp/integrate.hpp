#pragma once

// Adaptive Gauss-Kronrod quadrature on finite intervals and on [t, inf).
//
// Panels are refined by bisecting the panel with the largest error estimate
// until the summed estimate meets max(abs_tol, rel_tol * |I|).  Node sets and
// the refinement order are fixed, so results are bit-reproducible.

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "semicomp/errors.hpp"

namespace semicomp {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 200;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("QuadratureSpec: tolerances must be positive");
    if (max_subdivisions < 1) throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600222240738, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <typename F>
Panel gauss_kronrod_21(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 21> values{};
  values[20] = f_center;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    values[2 * j] = f1;
    values[2 * j + 1] = f2;
    kronrod += kKronrodWeights[j] * (f1 + f2);
    abs_sum += kKronrodWeights[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(f_center - mean);
  for (int j = 0; j < 10; ++j)
    asc += kKronrodWeights[j] * (std::abs(values[2 * j] - mean) + std::abs(values[2 * j + 1] - mean));

  const double value = kronrod * half;
  abs_sum *= std::abs(half);
  asc *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * abs_sum, err);
  return Panel{lo, hi, value, err};
}

}  // namespace detail

template <typename F>
QuadratureResult integrate_interval(F&& f, double lo, double hi, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw DomainError("integrate_interval: need finite lo <= hi");
  QuadratureResult out;
  if (lo == hi) {
    out.converged = true;
    return out;
  }
  int evaluations = 0;
  auto counted = [&](double x) {
    ++evaluations;
    const double v = f(x);
    if (std::isnan(v)) throw QuadratureError("integrand returned NaN at x = " + std::to_string(x), 0.0, 0.0);
    return v;
  };

  std::priority_queue<detail::Panel> panels;
  const detail::Panel first = detail::gauss_kronrod_21(counted, lo, hi);
  double total = first.value;
  double total_err = first.error;
  panels.push(first);
  int subdivisions = 0;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (subdivisions >= spec.max_subdivisions) break;
    const detail::Panel worst = panels.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;  // panel at machine resolution
    panels.pop();
    const detail::Panel left = detail::gauss_kronrod_21(counted, worst.lo, mid);
    const detail::Panel right = detail::gauss_kronrod_21(counted, mid, worst.hi);
    panels.push(left);
    panels.push(right);
    ++subdivisions;
    // Re-sum from scratch in a fixed order to avoid drift from repeated updates.
    total = 0.0;
    total_err = 0.0;
    auto copy = panels;
    while (!copy.empty()) {
      total += copy.top().value;
      total_err += copy.top().error;
      copy.pop();
    }
  }
  out.value = total;
  out.error = total_err;
  out.subdivisions = subdivisions;
  out.evaluations = evaluations;
  out.converged = total_err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
  return out;
}

// Integral of f over [t, inf) via x = t + scale * u / (1 - u), u in [0, 1).
// The Jacobian is scale / (1 - u)^2; scale = 1 gives the plain transform.
template <typename F>
QuadratureResult tail_integral(double t, F&& f, const QuadratureSpec& spec = {}, double scale = 1.0) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("tail_integral: t must be finite and >= 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("tail_integral: scale must be positive");
  auto mapped = [&](double u) {
    const double one_minus = 1.0 - u;
    const double x = t + scale * u / one_minus;
    if (!std::isfinite(x)) return 0.0;
    const double v = f(x);
    if (v == 0.0) return 0.0;
    return v * scale / (one_minus * one_minus);
  };
  return integrate_interval(mapped, 0.0, 1.0, spec);
}

// Throws QuadratureError when the tolerance was not met.
inline double require_converged(const QuadratureResult& r, const std::string& where) {
  if (!r.converged)
    throw QuadratureError(where + ": no convergence after " + std::to_string(r.subdivisions) +
                              " subdivisions (estimate " + std::to_string(r.value) + ", error " +
                              std::to_string(r.error) + ")",
                          r.value, r.error);
  return r.value;
}

}  // namespace semicomp
