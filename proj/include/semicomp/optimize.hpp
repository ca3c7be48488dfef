#pragma once

// Derivative-free simplex search and a BFGS polish, both minimizing.
// Objectives may return +inf to reject a point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace semicomp {

struct OptimResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double value_tol = 1e-10;  // relative spread of simplex values
  double step_tol = 1e-9;    // largest vertex distance, in units of the initial steps
};

// Adaptive-parameter Nelder-Mead (coefficients scale with dimension).
template <typename F>
OptimResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                        const NelderMeadOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  const double dn = static_cast<double>(n);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / dn;
  const double contract = 0.75 - 1.0 / (2.0 * dn);
  const double shrink = 1.0 - 1.0 / dn;

  OptimResult out;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  values[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[i + 1](i) += steps(i);
    values[i + 1] = eval(simplex[i + 1]);
  }
  std::vector<std::size_t> order(n + 1);

  while (out.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
      spread = std::max(spread, ((simplex[i] - simplex[best]).array() / steps.array()).abs().maxCoeff());
    const bool flat = std::isfinite(values[worst]) &&
                      values[worst] - values[best] <= opts.value_tol * (std::abs(values[best]) + 1e-12);
    if (flat && spread <= 1e3 * opts.step_tol) {
      out.converged = true;
      break;
    }
    if (spread <= opts.step_tol) {
      out.converged = std::isfinite(values[best]);
      break;
    }
    ++out.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= dn;

    const Eigen::VectorXd xr = centroid + reflect * (centroid - simplex[worst]);
    const double fr = eval(xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = centroid + expand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second_worst]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + contract * (xr - centroid))
                                       : Eigen::VectorXd(centroid - contract * (centroid - simplex[worst]));
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + shrink * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.x = simplex[best];
  out.value = values[best];
  return out;
}

struct BfgsOptions {
  int max_iterations = 300;
  double gradient_tol = 1e-4;
  double rel_value_tol = 1e-9;
};

struct BfgsResult : OptimResult {
  Eigen::VectorXd gradient;
  double last_rel_change = std::numeric_limits<double>::infinity();
};

// Quasi-Newton minimization with Armijo backtracking.  `grad` returns the
// gradient of f; `inverse_hessian0` seeds the curvature model.
template <typename F, typename G>
BfgsResult bfgs(F&& f, G&& grad, const Eigen::VectorXd& x0, const Eigen::MatrixXd& inverse_hessian0,
                const BfgsOptions& opts = {}) {
  BfgsResult out;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  Eigen::VectorXd x = x0;
  double fx = eval(x);
  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd inv_h = inverse_hessian0;
  bool just_reset = false;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter;
    if (g.norm() < opts.gradient_tol && out.last_rel_change < opts.rel_value_tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd direction = -inv_h * g;
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      inv_h = inverse_hessian0;
      direction = -inv_h * g;
      slope = g.dot(direction);
      if (!(slope < 0.0)) break;
    }
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      x_new = x + step * direction;
      f_new = eval(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (just_reset) break;
      inv_h = inverse_hessian0;
      just_reset = true;
      out.last_rel_change = 0.0;
      continue;
    }
    just_reset = false;
    const Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    out.last_rel_change = std::abs(f_new - fx) / std::max(1.0, std::abs(fx));
    x = x_new;
    fx = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(x.size(), x.size());
      inv_h = (eye - rho * s * y.transpose()) * inv_h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
  }
  out.converged = out.converged || (g.norm() < opts.gradient_tol && out.last_rel_change < opts.rel_value_tol);
  out.x = x;
  out.value = fx;
  out.gradient = g;
  return out;
}

}  // namespace semicomp
