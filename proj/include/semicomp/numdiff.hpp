#pragma once

// Finite-difference derivatives of scalar functions of an Eigen vector.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace semicomp {

// Step rule h_j = max(rel * |x_j|, floor).
inline Eigen::VectorXd relative_steps(const Eigen::VectorXd& x, double rel, double floor) {
  return x.cwiseAbs().unaryExpr([&](double v) { return std::max(rel * v, floor); });
}

template <typename F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = steps(j);
    probe(j) = x(j) + h;
    const double up = f(probe);
    probe(j) = x(j) - h;
    const double down = f(probe);
    probe(j) = x(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

// Fourth-order five-point stencil (-f(+2h) + 8 f(+h) - 8 f(-h) + f(-2h)) / 12h.
template <typename F>
Eigen::VectorXd four_point_gradient(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = steps(j);
    auto at = [&](double offset) {
      probe(j) = x(j) + offset;
      const double v = f(probe);
      probe(j) = x(j);
      return v;
    };
    g(j) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
  }
  return g;
}

// Central-difference Hessian.  Diagonal entries use the three-point rule,
// off-diagonals the four-corner rule, which is symmetric in (i, j).
template <typename F>
Eigen::MatrixXd central_hessian(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  const double f0 = f(x);
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = steps(i);
    probe(i) = x(i) + hi;
    const double up = f(probe);
    probe(i) = x(i) - hi;
    const double down = f(probe);
    probe(i) = x(i);
    h(i, i) = (up - 2.0 * f0 + down) / (hi * hi);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hi = steps(i);
      const double hj = steps(j);
      auto at = [&](double si, double sj) {
        probe(i) = x(i) + si * hi;
        probe(j) = x(j) + sj * hj;
        const double v = f(probe);
        probe(i) = x(i);
        probe(j) = x(j);
        return v;
      };
      h(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
      h(j, i) = h(i, j);
    }
  }
  return h;
}

}  // namespace semicomp
