#include "semicomp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "semicomp/errors.hpp"
#include "semicomp/numdiff.hpp"
#include "semicomp/optimize.hpp"

namespace semicomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Positions of gamma_1..3 in the parameter vector.
std::array<Eigen::Index, 3> shape_positions(const ModelParams& p) {
  std::array<Eigen::Index, 3> pos{};
  Eigen::Index k = 1;
  for (int i = 0; i < 3; ++i) {
    k += p.links[i].parameter_count();
    pos[i] = k++;
  }
  return pos;
}

}  // namespace

Eigen::VectorXd to_unconstrained(const ModelParams& params) {
  Eigen::VectorXd z = params.to_vector();
  const double excess = params.association.theta - 1.0 - params.association.eps;
  z(0) = std::log(std::max(excess, 1e-300));
  for (Eigen::Index k : shape_positions(params)) z(k) = std::log(z(k));
  return z;
}

ModelParams from_unconstrained(const Eigen::VectorXd& z, const ModelParams& layout) {
  Eigen::VectorXd v = z;
  v(0) = 1.0 + layout.association.eps + std::exp(z(0));
  for (Eigen::Index k : shape_positions(layout)) v(k) = std::exp(z(k));
  return layout.with_vector(v);
}

double normal_two_sided_quantile(double level) {
  if (!(level >= 0.0 && level < 1.0)) throw DomainError("confidence level must lie in [0, 1)");
  if (level == 0.0) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

std::vector<Interval> wald_intervals(const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance,
                                     double level) {
  if (covariance.rows() != estimates.size() || covariance.cols() != estimates.size())
    throw DomainError("wald_intervals: covariance does not match the estimate vector");
  const double z = normal_two_sided_quantile(level);
  std::vector<Interval> out(static_cast<std::size_t>(estimates.size()));
  for (Eigen::Index j = 0; j < estimates.size(); ++j) {
    const double var = covariance(j, j);
    auto& iv = out[static_cast<std::size_t>(j)];
    if (!(var >= 0.0) || !std::isfinite(var)) {
      iv = {std::nan(""), std::nan(""), true};
      continue;
    }
    const double half = z * std::sqrt(var);
    iv = {estimates(j) - half, estimates(j) + half, false};
  }
  return out;
}

CovarianceResult covariance_from_hessian(const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd neg = -0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg);
  if (eig.info() != Eigen::Success) throw DomainError("covariance: eigen decomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues();
  CovarianceResult out;
  if (values.minCoeff() > 0.0) {
    out.covariance = eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return out;
  }
  out.pseudo_inverse = true;
  const double cutoff = 1e-12 * values.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = values.unaryExpr([&](double v) { return std::abs(v) > cutoff ? 1.0 / v : 0.0; });
  out.covariance = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

Eigen::MatrixXd hessian(const ModelParams& params, const std::vector<ObservationCase>& data, const QuadratureSpec& q,
                        int workers, const std::vector<Eigen::Index>& free) {
  const Eigen::VectorXd full = params.to_vector();
  std::vector<Eigen::Index> idx = free;
  if (idx.empty())
    for (Eigen::Index j = 0; j < full.size(); ++j) idx.push_back(j);
  const auto m = static_cast<Eigen::Index>(idx.size());

  Eigen::VectorXd x(m);
  for (Eigen::Index j = 0; j < m; ++j) x(j) = full(idx[static_cast<std::size_t>(j)]);
  Eigen::VectorXd steps = relative_steps(x, 1e-4, 1e-4);
  for (Eigen::Index j = 0; j < m; ++j)
    if (idx[static_cast<std::size_t>(j)] == 0) {
      const double room = params.association.theta - 1.0 - params.association.eps;
      if (!(room > 0.0)) throw DomainError("hessian: theta is on its lower bound");
      steps(j) = std::min(steps(j), 0.5 * room);
    }

  auto f = [&](const Eigen::VectorXd& sub) {
    Eigen::VectorXd v = full;
    for (Eigen::Index j = 0; j < m; ++j) v(idx[static_cast<std::size_t>(j)]) = sub(j);
    return log_likelihood(params.with_vector(v), data, q, workers);
  };
  Eigen::MatrixXd h;
  try {
    h = central_hessian(f, x, steps);
  } catch (const std::exception&) {
    try {
      h = central_hessian(f, x, steps / 10.0);
    } catch (const std::exception& e) {
      throw DomainError(std::string("hessian: stencil evaluation failed after shrinking the step: ") + e.what());
    }
  }
  return 0.5 * (h + h.transpose());
}

FitResult fit(const std::vector<ObservationCase>& data, const FitConfig& config) {
  config.quadrature.validate();
  FitResult out;
  for (const auto& c : data) ++out.metadata.case_counts[case_index(c.label)];
  const auto populated = std::count_if(out.metadata.case_counts.begin(), out.metadata.case_counts.end(),
                                       [](std::size_t n) { return n > 0; });
  if (populated < 2) throw DomainError("fit: need records in at least two of the four cases");
  out.metadata.imputation = config.imputation;
  out.metadata.quadrature = config.quadrature;
  out.metadata.theta_eps = config.theta_eps;

  const ModelParams layout = ModelParams::initial(config.intercept, config.theta_eps);
  const Eigen::Index n = layout.parameter_count();

  auto objective = [&](const Eigen::VectorXd& z) {
    try {
      const double ll = log_likelihood(from_unconstrained(z, layout), data, config.quadrature, config.workers);
      return std::isfinite(ll) ? -ll : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  // Simplex steps: coefficients move in units of one over the covariate's mean size.
  Eigen::VectorXd steps = Eigen::VectorXd::Constant(n, 0.5);
  {
    Eigen::Vector3d mean_abs = Eigen::Vector3d::Zero();
    for (const auto& c : data)
      mean_abs += Eigen::Vector3d(std::abs(c.covariates.age), std::abs(c.covariates.surgery),
                                  std::abs(c.covariates.mismatch.value_or(0.0)));
    mean_abs /= static_cast<double>(data.size());
    Eigen::Index k = 1;
    for (int i = 0; i < 3; ++i) {
      if (layout.links[i].intercept) ++k;
      for (Eigen::Index c = 0; c < layout.links[i].covariate_count(); ++c) steps(k++) = 0.5 / std::max(1.0, mean_abs(c));
      steps(k++) = 0.3;
    }
  }

  std::vector<Eigen::VectorXd> starts{to_unconstrained(layout)};
  for (const auto& v : config.extra_starts) {
    try {
      starts.push_back(to_unconstrained(layout.with_vector(v)));
    } catch (const std::exception& e) {
      out.convergence.notes.push_back(std::string("extra start rejected: ") + e.what());
    }
  }
  boost::random::mt19937_64 rng(config.seed);
  boost::random::normal_distribution<double> jitter(0.0, 1.0);
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd z = starts.front();
    for (Eigen::Index j = 0; j < n; ++j) z(j) += steps(j) * jitter(rng);
    starts.push_back(z);
  }

  OptimResult best;
  int evaluations = 0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const double f0 = objective(starts[s]);
    out.start_log_likelihoods.push_back(-f0);
    if (!std::isfinite(f0)) {
      out.convergence.notes.push_back("start " + std::to_string(s) + " skipped: log-likelihood not finite");
      continue;
    }
    ++out.convergence.restarts_used;
    NelderMeadOptions nm_opts;
    nm_opts.max_evaluations = config.simplex_evaluations;
    OptimResult r = nelder_mead(objective, starts[s], steps, nm_opts);
    evaluations += r.evaluations;
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) throw DomainError("fit: no start produced a finite log-likelihood");

  // Restart the simplex once at the best point before the gradient polish.
  {
    NelderMeadOptions nm_opts;
    nm_opts.max_evaluations = config.simplex_evaluations;
    OptimResult r = nelder_mead(objective, best.x, 0.2 * steps, nm_opts);
    evaluations += r.evaluations;
    if (r.value < best.value) best = r;
  }

  // Fourth-order gradient with steps proportional to the simplex scale, so
  // stiff coefficient directions get correspondingly small steps.
  const Eigen::VectorXd grad_steps = 1e-3 * steps;
  auto gradient = [&](const Eigen::VectorXd& z) {
    evaluations += 4 * static_cast<int>(z.size());
    return four_point_gradient(objective, z, grad_steps);
  };
  Eigen::MatrixXd inv_h0 = Eigen::MatrixXd::Zero(n, n);
  {
    const double f0 = best.value;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 0.05 * steps(j);
      Eigen::VectorXd zp = best.x, zm = best.x;
      zp(j) += h;
      zm(j) -= h;
      const double curv = (objective(zp) - 2.0 * f0 + objective(zm)) / (h * h);
      evaluations += 2;
      inv_h0(j, j) = (curv > 0.0 && std::isfinite(curv)) ? 1.0 / curv : steps(j) * steps(j);
    }
  }
  BfgsOptions bfgs_opts;
  const BfgsResult polished = bfgs(objective, gradient, best.x, inv_h0, bfgs_opts);
  evaluations += polished.evaluations;
  Eigen::VectorXd z_hat = best.x;
  double f_hat = best.value;
  if (polished.value <= best.value) {
    z_hat = polished.x;
    f_hat = polished.value;
  }

  // Newton steps on a finite-difference Hessian.  In stiff directions a
  // gradient of 1e-4 is below what line-search value comparisons resolve.
  Eigen::VectorXd g_hat = gradient(z_hat);
  double last_change = polished.last_rel_change;
  int newton_iterations = 0;
  for (; newton_iterations < 8; ++newton_iterations) {
    if (g_hat.norm() < bfgs_opts.gradient_tol && last_change < bfgs_opts.rel_value_tol) break;
    const Eigen::MatrixXd h = central_hessian(objective, z_hat, 1e-2 * steps);
    evaluations += static_cast<int>(2 * n * n + 1);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (h + h.transpose()));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd delta = ldlt.solve(g_hat);
    bool moved = false;
    for (double scale = 1.0; scale > 1e-3; scale *= 0.5) {
      const Eigen::VectorXd z_new = z_hat - scale * delta;
      const double f_new = objective(z_new);
      ++evaluations;
      if (!std::isfinite(f_new) || f_new > f_hat + 1e-12 * std::abs(f_hat)) continue;
      const Eigen::VectorXd g_new = gradient(z_new);
      if (g_new.norm() >= g_hat.norm() && f_new >= f_hat) continue;
      last_change = std::abs(f_new - f_hat) / std::max(1.0, std::abs(f_hat));
      z_hat = z_new;
      f_hat = std::min(f_hat, f_new);
      g_hat = g_new;
      moved = true;
      break;
    }
    if (!moved) break;
  }

  out.estimates = from_unconstrained(z_hat, layout);
  out.parameter_names = out.estimates.parameter_names();
  out.log_likelihood = -f_hat;
  out.convergence.iterations = polished.iterations + newton_iterations;
  out.convergence.evaluations = evaluations;
  out.convergence.gradient_norm = g_hat.norm();
  out.convergence.last_rel_change = last_change;
  out.convergence.converged =
      out.convergence.gradient_norm < bfgs_opts.gradient_tol && last_change < bfgs_opts.rel_value_tol;
  if (!out.convergence.converged) out.convergence.notes.push_back("gradient polish did not meet the stopping rule");

  // Natural-scale Hessian and Wald intervals.
  const double theta = out.estimates.association.theta;
  out.independence_boundary = theta - 1.0 - config.theta_eps <= 10.0 * config.theta_eps;
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = out.independence_boundary ? 1 : 0; j < n; ++j) free.push_back(j);
  const Eigen::MatrixXd h_free = hessian(out.estimates, data, config.quadrature, config.workers, free);

  const auto m = static_cast<Eigen::Index>(free.size());
  out.hessian = Eigen::MatrixXd::Constant(n, n, std::nan(""));
  out.covariance = Eigen::MatrixXd::Constant(n, n, std::nan(""));
  const CovarianceResult cov = covariance_from_hessian(h_free);
  out.covariance_pseudo_inverse = cov.pseudo_inverse;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      out.hessian(free[a], free[b]) = h_free(a, b);
      out.covariance(free[a], free[b]) = cov.covariance(a, b);
    }
  const Eigen::VectorXd est = out.estimates.to_vector();
  out.standard_errors = out.covariance.diagonal().unaryExpr(
      [](double v) { return v >= 0.0 ? std::sqrt(v) : std::nan(""); });
  out.ci95 = wald_intervals(est, out.covariance, 0.95);
  if (out.independence_boundary) out.convergence.notes.push_back("independence boundary: theta interval suppressed");
  if (cov.pseudo_inverse) out.convergence.notes.push_back("negative Hessian not positive definite: pseudo-inverse");

  // Natural-scale gradient over the free parameters.
  {
    Eigen::VectorXd x(m);
    for (Eigen::Index a = 0; a < m; ++a) x(a) = est(free[a]);
    auto f = [&](const Eigen::VectorXd& sub) {
      Eigen::VectorXd v = est;
      for (Eigen::Index a = 0; a < m; ++a) v(free[a]) = sub(a);
      return log_likelihood(out.estimates.with_vector(v), data, config.quadrature, config.workers);
    };
    Eigen::VectorXd steps_nat = relative_steps(x, 1e-5, 1e-6);
    const Eigen::VectorXd g = central_gradient(f, x, steps_nat);
    out.convergence.natural_gradient_norm = g.norm();
    double scaled = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      const double se = out.standard_errors(free[a]);
      if (std::isfinite(se)) scaled = std::max(scaled, std::abs(g(a) * se));
    }
    out.convergence.scaled_gradient_max = scaled;
  }
  return out;
}

}  // namespace semicomp
