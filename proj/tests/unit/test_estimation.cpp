#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "semicomp/errors.hpp"
#include "semicomp/estimation.hpp"
#include "semicomp/numdiff.hpp"
#include "semicomp/simulation.hpp"

using namespace semicomp;

namespace {

std::vector<ObservationCase> small_sample(std::size_t n, std::uint64_t seed) {
  std::istringstream in(
      "n = " + std::to_string(n) + "\nseed = " + std::to_string(seed) +
      "\ntheta = 2\nshapes = 0.8 1.2 0.9\nbeta1 = 0.02 -0.3\nbeta2 = 0.01 0.2 -0.1\nbeta3 = 0.03 0.1 0.1\n"
      "age = 20 40\ncensor = 6 14\n");
  return simulate(parse_scenario(in)).cases;
}

FitConfig quick_config() {
  FitConfig c;
  c.restarts = 1;
  return c;
}

// Shared fit so the expensive optimisation runs once.
const FitResult& shared_fit() {
  static const FitResult r = fit(small_sample(150, 31), quick_config());
  return r;
}

}  // namespace

TEST_CASE("central Hessian of a quadratic recovers its matrix") {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0.5, 1, 3, -0.2, 0.5, -0.2, 2;
  auto f = [&](const Eigen::VectorXd& x) { return -0.5 * x.dot(a * x) + x.sum(); };
  const Eigen::VectorXd x = Eigen::Vector3d(0.3, -1.0, 2.0);
  const Eigen::MatrixXd h = central_hessian(f, x, Eigen::VectorXd::Constant(3, 1e-3));
  CHECK((h + a).cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::VectorXd g = four_point_gradient(f, x, Eigen::VectorXd::Constant(3, 1e-3));
  CHECK((g - (-a * x + Eigen::VectorXd::Ones(3))).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Wald intervals") {
  CHECK(normal_two_sided_quantile(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_two_sided_quantile(0.0) == 0.0);
  CHECK_THROWS_AS(normal_two_sided_quantile(1.0), DomainError);

  Eigen::VectorXd est(3);
  est << 0.0, 1.677, 5.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(0, 0) = 1.0;
  cov(1, 1) = 0.2706 * 0.2706;
  cov(2, 2) = -0.5;
  const auto ci = wald_intervals(est, cov);
  CHECK(ci[0].lower == doctest::Approx(-1.96).epsilon(1e-3));
  CHECK(ci[0].upper == doctest::Approx(1.96).epsilon(1e-3));
  CHECK(ci[1].lower == doctest::Approx(1.147).epsilon(1e-3));
  CHECK(ci[1].upper == doctest::Approx(2.207).epsilon(1e-3));
  CHECK(ci[2].flagged);
  CHECK(std::isnan(ci[2].lower));
  const auto degenerate = wald_intervals(est, cov, 0.0);
  CHECK(degenerate[1].lower == degenerate[1].upper);
  CHECK_THROWS_AS(wald_intervals(est, Eigen::MatrixXd::Identity(2, 2)), DomainError);
}

TEST_CASE("covariance from a Hessian") {
  Eigen::MatrixXd h(2, 2);
  h << -4, 1, 1, -2;
  const auto c = covariance_from_hessian(h);
  CHECK_FALSE(c.pseudo_inverse);
  CHECK(((-h) * c.covariance - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXd singular(2, 2);
  singular << -1, -1, -1, -1;
  const auto p = covariance_from_hessian(singular);
  CHECK(p.pseudo_inverse);
  CHECK(p.covariance.allFinite());
}

TEST_CASE("unconstrained coordinates round-trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> theta(1.01, 20.0), shape(0.1, 5.0), beta(-2.0, 2.0);
  for (bool intercept : {false, true}) {
    const ModelParams layout = ModelParams::initial(intercept);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd v = layout.to_vector();
      v(0) = theta(rng);
      for (Eigen::Index j = 1; j < v.size(); ++j) v(j) = beta(rng);
      const auto names = layout.parameter_names();
      for (Eigen::Index j = 0; j < v.size(); ++j)
        if (names[static_cast<std::size_t>(j)].rfind("gamma", 0) == 0) v(j) = shape(rng);
      const ModelParams p = layout.with_vector(v);
      const ModelParams back = from_unconstrained(to_unconstrained(p), layout);
      CHECK((back.to_vector() - v).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("fit rejects degenerate designs") {
  auto data = small_sample(40, 2);
  std::vector<ObservationCase> one_case;
  for (const auto& c : data)
    if (c.label == data.front().label) one_case.push_back(c);
  CHECK_THROWS_AS(fit(one_case, quick_config()), DomainError);
}

TEST_CASE("fit: stationary point, diagnostics, and start consistency") {
  const FitResult& r = shared_fit();
  CHECK(r.convergence.converged);
  CHECK(r.convergence.natural_gradient_norm < 1e-3);
  CHECK(r.convergence.scaled_gradient_max < 1e-2);
  CHECK(std::isfinite(r.log_likelihood));
  for (double s : r.start_log_likelihoods) CHECK(r.log_likelihood >= s - 1e-9);
  CHECK(r.parameter_names.size() == 12);
  CHECK(r.hessian.rows() == 12);
  CHECK((r.hessian - r.hessian.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.ci95.size() == 12);
  CHECK(r.estimates.association.theta > 1.0);
  if (!r.covariance_pseudo_inverse) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-r.hessian);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    for (Eigen::Index j = 0; j < 12; ++j) {
      const auto& iv = r.ci95[static_cast<std::size_t>(j)];
      CHECK(iv.lower < r.estimates.to_vector()(j));
      CHECK(iv.upper > r.estimates.to_vector()(j));
    }
  }
}

TEST_CASE("Hessian agrees with the Jacobian of the numerical gradient") {
  const FitResult& r = shared_fit();
  const auto data = small_sample(150, 31);
  const Eigen::VectorXd est = r.estimates.to_vector();
  const Eigen::Index m = est.size();
  Eigen::MatrixXd jac(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = std::max(1e-4 * std::abs(est(j)), 1e-4);
    Eigen::VectorXd up = est, down = est;
    up(j) += h;
    down(j) -= h;
    jac.col(j) = (numerical_gradient(r.estimates.with_vector(up), data) -
                  numerical_gradient(r.estimates.with_vector(down), data)) /
                 (2.0 * h);
  }
  // Each column of the gradient Jacobian is an independent estimate; its
  // asymmetry and its distance from the stencil Hessian are both small.
  const double scale = std::max(1.0, r.hessian.cwiseAbs().maxCoeff());
  CHECK((jac - jac.transpose()).cwiseAbs().maxCoeff() / scale < 1e-4);
  CHECK((jac - r.hessian).cwiseAbs().maxCoeff() / scale < 1e-3);
}

TEST_CASE("fit is deterministic and independent of the worker count") {
  const auto data = small_sample(150, 31);
  FitConfig c = quick_config();
  c.workers = 2;
  const FitResult two = fit(data, c);
  const FitResult& one = shared_fit();
  CHECK(one.estimates.to_vector() == two.estimates.to_vector());
  CHECK(one.log_likelihood == two.log_likelihood);
  CHECK(one.covariance == two.covariance);
}

TEST_CASE("record order changes estimates only at optimizer precision") {
  auto data = small_sample(150, 31);
  std::reverse(data.begin(), data.end());
  const FitResult rev = fit(data, quick_config());
  const FitResult& r = shared_fit();
  CHECK(rev.log_likelihood == doctest::Approx(r.log_likelihood).epsilon(1e-9));
  for (Eigen::Index j = 0; j < r.standard_errors.size(); ++j) {
    const double se = r.standard_errors(j);
    CHECK(std::abs(rev.estimates.to_vector()(j) - r.estimates.to_vector()(j)) < 1e-2 * se);
    CHECK(rev.standard_errors(j) == doctest::Approx(se).epsilon(1e-2));
  }
}
