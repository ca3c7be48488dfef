#include <cmath>
#include <random>

#include "doctest.h"
#include "semicomp/errors.hpp"
#include "semicomp/integrate.hpp"
#include "semicomp/marginals.hpp"

using namespace semicomp;

TEST_CASE("survival examples") {
  CHECK(survival(0.0, WeibullMarginald{2.0, 0.5}) == 1.0);
  CHECK(survival(3.0, WeibullMarginald{3.0, 1.7}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(survival(1.0, WeibullMarginald{2.0, 2.0}) == doctest::Approx(0.7788008).epsilon(1e-7));
  CHECK_THROWS_AS(survival(-1.0, WeibullMarginald{1.0, 1.0}), DomainError);
}

TEST_CASE("marginal parameters must be positive") {
  CHECK_THROWS_AS(WeibullMarginald(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(WeibullMarginald(1.0, -2.0), DomainError);
  CHECK_THROWS_AS(WeibullMarginald(std::nan(""), 1.0), DomainError);
}

TEST_CASE("density examples") {
  CHECK(density(1.0, WeibullMarginald{1.0, 1.0}) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(density(2.0, WeibullMarginald{1.0, 2.0}) == doctest::Approx(4.0 * std::exp(-4.0)).epsilon(1e-14));
  const WeibullMarginald m{3.0, 0.7};
  const auto r = tail_integral(0.0, [&](double x) { return density(x, m); }, {1e-13, 1e-11, 500}, 3.0);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("density at zero") {
  CHECK_THROWS_AS(density(0.0, WeibullMarginald{1.0, 0.5}), DomainError);
  CHECK(density(0.0, WeibullMarginald{4.0, 1.0}) == 0.25);
  CHECK(density(0.0, WeibullMarginald{4.0, 2.0}) == 0.0);
  CHECK_THROWS_AS(log_density(0.0, WeibullMarginald{1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(density(-0.5, WeibullMarginald{1.0, 2.0}), DomainError);
}

TEST_CASE("log forms") {
  const WeibullMarginald m{2.0, 0.4};
  CHECK(log_survival(2.0, m) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cumulative_hazard(0.0, m) == 0.0);
  CHECK(std::abs(std::exp(log_density(0.5, m)) / density(0.5, m) - 1.0) < 1e-14);
  CHECK(cumulative_hazard(1.3, m) == doctest::Approx(-log_survival(1.3, m)).epsilon(1e-15));
}

TEST_CASE("quantile") {
  CHECK(quantile(std::exp(-1.0), WeibullMarginald{5.0, 2.0}) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK_THROWS_AS(quantile(0.0, WeibullMarginald{1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(quantile(1.0, WeibullMarginald{1.0, 1.0}), DomainError);
  CHECK(quantile(1.0 - 1e-12, WeibullMarginald{1.0, 1.0}) < 1e-11);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9), lam(0.1, 10.0), gam(0.3, 4.0);
  for (int i = 0; i < 100; ++i) {
    const WeibullMarginald m{lam(rng), gam(rng)};
    const double p = u(rng);
    CHECK(std::abs(survival(quantile(p, m), m) - p) < 1e-12);
  }
}

TEST_CASE("survival is monotone and bounded; density is minus its derivative") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lam(0.5, 5.0), gam(0.3, 3.0), x(0.01, 10.0);
  for (int i = 0; i < 20; ++i) {
    const WeibullMarginald m{lam(rng), gam(rng)};
    const double a = quantile(0.05 + 0.9 * x(rng) / 10.0, m), b = a * 1.01;
    CHECK(survival(a, m) <= 1.0);
    CHECK(survival(a, m) >= 0.0);
    if (density(a, m) > 0.0) CHECK(survival(b, m) < survival(a, m));
    const double h = 1e-5 * a;
    const double fd = -(survival(a + h, m) - survival(a - h, m)) / (2.0 * h);
    if (density(a, m) > 1e-200) CHECK(std::abs(fd / density(a, m) - 1.0) < 1e-6);
  }
}

TEST_CASE("cumulative hazard convex exactly when shape >= 1") {
  for (double g : {0.5, 1.0, 2.5}) {
    const WeibullMarginald m{2.0, g};
    double min_second = 1e300;
    for (double x = 0.1; x < 8.0; x += 0.1) {
      const double d2 = cumulative_hazard(x + 0.05, m) - 2.0 * cumulative_hazard(x, m) + cumulative_hazard(x - 0.05, m);
      min_second = std::min(min_second, d2);
      CHECK(cumulative_hazard(x + 0.05, m) >= cumulative_hazard(x, m));
    }
    if (g >= 1.0) CHECK(min_second >= -1e-14);
    else CHECK(min_second < 0.0);
  }
}

TEST_CASE("link scale") {
  LinkSpec zero = LinkSpec::zeros({"age", "surgery"});
  CHECK(link_scale(zero, Eigen::Vector2d(50.0, 1.0)) == 1.0);

  LinkSpec x1 = LinkSpec::zeros({"age", "surgery"});
  x1.coefficients << 0.087, -1.316;
  CHECK(link_scale(x1, Eigen::Vector2d(50.0, 1.0)) == doctest::Approx(20.78).epsilon(1e-3));

  LinkSpec only(Eigen::VectorXd::Constant(1, 0.7), {}, true);
  CHECK(link_scale(only, Eigen::VectorXd(0)) == doctest::Approx(std::exp(0.7)).epsilon(1e-15));

  CHECK_THROWS_AS(link_scale(x1, Eigen::Vector3d(1.0, 2.0, 3.0)), DomainError);
  CHECK_THROWS_AS(link_scale(x1, Eigen::Vector2d(std::nan(""), 1.0)), DomainError);
  CHECK_THROWS_AS(LinkSpec(Eigen::VectorXd::Zero(3), {"age", "surgery"}), DomainError);
  CHECK(LinkSpec::zeros({"a", "b"}, true).parameter_count() == 3);
}

TEST_CASE("link scale is invariant under joint reordering") {
  LinkSpec a(Eigen::Vector3d(0.1, -0.4, 0.03), {"age", "surgery", "mismatch"});
  LinkSpec b(Eigen::Vector3d(0.03, 0.1, -0.4), {"mismatch", "age", "surgery"});
  CHECK(link_scale(a, Eigen::Vector3d(40.0, 1.0, 2.5)) ==
        doctest::Approx(link_scale(b, Eigen::Vector3d(2.5, 40.0, 1.0))).epsilon(1e-15));
}
