#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "semicomp/copula.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/integrate.hpp"

using namespace semicomp;

TEST_CASE("analytic tails") {
  const auto r = tail_integral(1.0, [](double x) { return std::exp(-x); });
  CHECK(std::abs(r.value - std::exp(-1.0)) < 1e-10);
  CHECK(r.converged);
  CHECK(std::abs(r.value - std::exp(-1.0)) <= r.error + 1e-15);

  const double g = 0.7, t = 0.3;
  const auto w = tail_integral(t, [&](double x) { return g * std::pow(x, g - 1.0) * std::exp(-std::pow(x, g)); });
  CHECK(std::abs(w.value - std::exp(-std::pow(t, g))) < 1e-10);
  CHECK(std::abs(w.value - std::exp(-std::pow(t, g))) <= w.error + 1e-15);
}

TEST_CASE("diagonal integrand of independent unit exponentials integrates to minus one half") {
  const BivariatePaird p{WeibullMarginald{1.0, 1.0}, WeibullMarginald{1.0, 1.0}, Association{1.0}};
  const auto r = tail_integral(0.0, [&](double x) { return diagonal_integrand(x, p); });
  CHECK(r.value == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("scale argument does not change the value") {
  auto f = [](double x) { return std::exp(-x / 50.0) / 50.0; };
  CHECK(tail_integral(2.0, f, {}, 50.0).value == doctest::Approx(std::exp(-0.04)).epsilon(1e-10));
  CHECK(tail_integral(2.0, f, {}, 1.0).value == doctest::Approx(std::exp(-0.04)).epsilon(1e-8));
}

TEST_CASE("additivity over a split point") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  auto f = [](double x) { return -std::exp(-1.3 * x) * (1.0 + std::sin(x) * 0.5); };
  for (int i = 0; i < 10; ++i) {
    double t = u(rng), s = u(rng);
    if (t > s) std::swap(t, s);
    const auto whole = tail_integral(t, f);
    const auto head = integrate_interval(f, t, s);
    const auto rest = tail_integral(s, f);
    CHECK(std::abs(whole.value - head.value - rest.value) <= whole.error + head.error + rest.error + 1e-14);
  }
}

TEST_CASE("magnitude of a nonpositive decaying tail is nonincreasing") {
  const BivariatePaird p{WeibullMarginald{1.2, 0.6}, WeibullMarginald{0.9, 1.5}, Association{2.5}};
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t < 6.0; t += 0.25) {
    const double v = std::abs(tail_integral(t, [&](double x) { return diagonal_integrand(x, p); }).value);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("non-convergence and NaN are reported") {
  QuadratureSpec tight{1e-16, 1e-16, 2};
  const auto r = tail_integral(0.0, [](double x) { return 1.0 / std::sqrt(x + 1e-12) * std::exp(-x); }, tight);
  CHECK_FALSE(r.converged);
  CHECK(r.subdivisions == 2);
  CHECK_THROWS_AS(require_converged(r, "test"), QuadratureError);
  try {
    require_converged(r, "test");
  } catch (const QuadratureError& e) {
    CHECK(e.best_estimate() == r.value);
    CHECK(e.achieved_error() == r.error);
  }
  CHECK_THROWS_AS(tail_integral(0.0, [](double) { return std::nan(""); }), QuadratureError);
}

TEST_CASE("quadrature settings validation") {
  CHECK_THROWS_AS((QuadratureSpec{0.0, 1e-8, 10}.validate()), DomainError);
  CHECK_THROWS_AS((QuadratureSpec{1e-10, -1.0, 10}.validate()), DomainError);
  CHECK_THROWS_AS((QuadratureSpec{1e-10, 1e-8, 0}.validate()), DomainError);
  CHECK_THROWS_AS(tail_integral(-1.0, [](double) { return 0.0; }), DomainError);
}

TEST_CASE("repeated evaluation is bit-identical") {
  auto f = [](double x) { return std::exp(-x * x) * std::cos(3.0 * x); };
  CHECK(tail_integral(0.1, f).value == tail_integral(0.1, f).value);
}
