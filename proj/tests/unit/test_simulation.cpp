#include <cmath>
#include <sstream>

#include "doctest.h"
#include "semicomp/copula.hpp"
#include "semicomp/dataio.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/simulation.hpp"
#include "semicomp/validate.hpp"

using namespace semicomp;

namespace {

const char* kScenario =
    "# small scenario\n"
    "n = 300\n"
    "seed = 7\n"
    "theta = 2\n"
    "shapes = 0.5 0.8 0.5\n"
    "beta1 = 0.05 -0.5\n"
    "beta2 = 0.05 0.2 -0.1\n"
    "beta3 = 0.05 0.2 -0.1\n"
    "surgery_p = 0.3\n"
    "censor = 8\n";

SimScenario scenario(const std::string& extra = "") {
  std::istringstream in(std::string(kScenario) + extra);
  return parse_scenario(in);
}

LatentSubject latent(double x1, double x2, double x3, double c) {
  LatentSubject l;
  l.id = 1;
  l.x1 = x1;
  l.x2 = x2;
  l.x3 = x3;
  l.censor = c;
  l.covariates.mismatch = 1.0;
  return l;
}

}  // namespace

TEST_CASE("observe: illness-death reduction") {
  auto c = observe(latent(5, 10, 100, 1000));
  CHECK(c.label == CaseLabel::DeathBeforeTransplant);
  CHECK(*c.x1 == 5);
  c = observe(latent(50, 10, 60, 1000));
  CHECK(c.label == CaseLabel::TransplantThenDeath);
  CHECK(*c.x2 == 10);
  CHECK(*c.x3 == 60);
  c = observe(latent(50, 10, 200, 100));
  CHECK(c.label == CaseLabel::TransplantCensored);
  CHECK(*c.x3 == 100);
  c = observe(latent(500, 300, 400, 100));
  CHECK(c.label == CaseLabel::FullyCensored);
  CHECK(c.censor_time() == 100);
  CHECK_THROWS_AS(observe(latent(1, 1, 1, 0)), DomainError);
}

TEST_CASE("scenario parsing") {
  const auto s = scenario();
  CHECK(s.n == 300);
  CHECK(s.seed == 7);
  CHECK(s.params.association.theta == 2.0);
  CHECK(s.params.shapes[1] == 0.8);
  CHECK(s.params.links[0].coefficients(1) == -0.5);
  CHECK(s.censoring.administrative());
  CHECK(s.reject_disordered);
  CHECK(s.covariates.surgery_probability == 0.3);

  CHECK_THROWS_AS(scenario("colour = red\n"), InputError);
  CHECK_THROWS_AS(scenario("n = 4\n"), InputError);
  CHECK_THROWS_AS(scenario("reject_disordered = maybe\n"), InputError);
  std::istringstream missing("n = 3\nseed = 1\n");
  CHECK_THROWS_AS(parse_scenario(missing), InputError);
  std::istringstream bad_theta(std::string(kScenario).replace(std::string(kScenario).find("theta = 2"), 9, "theta = 0.5"));
  CHECK_THROWS_AS(parse_scenario(bad_theta), InputError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.txt"), InputError);
}

TEST_CASE("scenario writer round-trips") {
  for (const std::string extra : {"", "reject_disordered = false\n", "age = 30 50\nmismatch = 0 2\n"}) {
    auto s = scenario(extra);
    s.censoring = {5.0, 9.5};
    std::stringstream a;
    write_scenario(a, s);
    const auto t = parse_scenario(a);
    std::ostringstream b;
    write_scenario(b, t);
    CHECK(a.str() == b.str());
    CHECK(t.params.to_vector() == s.params.to_vector());
    CHECK(t.reject_disordered == s.reject_disordered);
  }
}

TEST_CASE("stream seeds differ by row and by seed") {
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
  CHECK(stream_seed(5, 9) == stream_seed(5, 9));
}

TEST_CASE("sampling is deterministic and independent of the worker count") {
  const auto s = scenario();
  const auto a = sample_trivariate(s, 1);
  const auto b = sample_trivariate(s, 1);
  const auto c = sample_trivariate(s, 3);
  REQUIRE(a.size() == s.n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x1 == b[i].x1);
    CHECK(a[i].x3 == c[i].x3);
    CHECK(a[i].covariates.age == c[i].covariates.age);
    CHECK(a[i].id == static_cast<long>(i + 1));
  }
  auto other = s;
  other.seed = 8;
  CHECK(sample_trivariate(other)[0].x1 != a[0].x1);
}

TEST_CASE("simulated observations respect the case geometry") {
  const auto sim = simulate(scenario());
  for (std::size_t i = 0; i < sim.cases.size(); ++i) {
    const auto& c = sim.cases[i];
    const auto& l = sim.latent[i];
    CHECK(l.covariates.age >= 20.0);
    CHECK(l.covariates.age <= 60.0);
    CHECK(*l.covariates.mismatch >= 0.0);
    CHECK(*l.covariates.mismatch <= 3.0);
    if (c.label == CaseLabel::TransplantThenDeath || c.label == CaseLabel::TransplantCensored) CHECK(*c.x2 <= *c.x3);
    if (c.label == CaseLabel::DeathBeforeTransplant) CHECK(*c.x1 <= 8.0);
    // Rejection removes the triples whose transplant path puts death first.
    CHECK_FALSE((l.x3 <= l.x2 && l.x2 < l.x1));
  }
}

TEST_CASE("day-resolution records survive the data pipeline") {
  const auto sim = simulate(scenario());
  const auto records = to_records(sim.cases);
  std::stringstream buf;
  write_records(buf, records);
  const auto parsed = parse_records(buf);
  CHECK(parsed.issues.empty());
  REQUIRE(parsed.records.size() == records.size());
  const auto f = filter_records(parsed.records);
  CHECK(f.excluded.empty());
  const auto ds = build_dataset(f.kept);
  for (std::size_t i = 0; i < ds.cases.size(); ++i) {
    CHECK(ds.cases[i].label == sim.cases[i].label);
    if (sim.cases[i].x2) {
      CHECK(*ds.cases[i].x2 >= *sim.cases[i].x2);
      CHECK(*ds.cases[i].x2 < *sim.cases[i].x2 + 1.0);
    }
  }
}

TEST_CASE("Clayton uniforms: margins uniform, tau matches") {
  const std::size_t n = 20000;
  const auto u = sample_clayton_uniforms(3.0, 3, n, 99);
  REQUIRE(u.rows() == static_cast<Eigen::Index>(n));
  for (int j = 0; j < 3; ++j) {
    CHECK(ks_uniform_statistic(u.col(j)) < ks_critical_1pct(n));
    CHECK(u.col(j).minCoeff() > 0.0);
    CHECK(u.col(j).maxCoeff() < 1.0);
  }
  // tau = 0.5, sampling SD about 0.004
  CHECK(kendall_tau_sample(u.col(0), u.col(1)) == doctest::Approx(0.5).epsilon(0.04));
  CHECK(kendall_tau_sample(u.col(1), u.col(2)) == doctest::Approx(0.5).epsilon(0.04));
  const auto ind = sample_clayton_uniforms(1.0, 2, n, 99);
  CHECK(std::abs(kendall_tau_sample(ind.col(0), ind.col(1))) < 0.02);
  CHECK_THROWS_AS(sample_clayton_uniforms(2.0, 4, 10, 1), DomainError);
}

TEST_CASE("Monte Carlo ordered-tail probability for independent exponentials") {
  const BivariatePaird pair{WeibullMarginald{1.0, 1.0}, WeibullMarginald{1.0, 1.0}, Association{1.0}};
  const auto at0 = mc_prob_ordered_tail(0.0, pair, 200000, 3);
  CHECK(std::abs(at0.probability - 0.5) < 4.0 * at0.standard_error);
  const auto at1 = mc_prob_ordered_tail(1.0, pair, 200000, 3);
  CHECK(std::abs(at1.probability - std::exp(-2.0) / 2.0) < 4.0 * at1.standard_error);
  CHECK(at1.samples == 200000);
}

TEST_CASE("kendall tau sample helper") {
  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 10, 20, 30, 40;
  CHECK(kendall_tau_sample(a, b) == doctest::Approx(1.0));
  CHECK(kendall_tau_sample(a, -b) == doctest::Approx(-1.0));
}
