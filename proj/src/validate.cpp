#include "semicomp/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "semicomp/dataio.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/likelihood.hpp"
#include "semicomp/marginals.hpp"
#include "semicomp/numdiff.hpp"
#include "semicomp/simulation.hpp"

namespace semicomp {

namespace {

using Rng = boost::random::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return boost::random::uniform_real_distribution<double>(lo, hi)(rng); }

const QuadratureSpec kTight{1e-13, 1e-11, 1000};

// Standard error of a proportion of n draws with success probability p.
double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

BivariatePaird random_pair(Rng& rng, double theta_lo = 1.2, double theta_hi = 4.0) {
  return {WeibullMarginald{uniform(rng, 0.5, 3.0), uniform(rng, 0.4, 2.0)},
          WeibullMarginald{uniform(rng, 0.5, 3.0), uniform(rng, 0.4, 2.0)}, Association{uniform(rng, theta_lo, theta_hi)}};
}

std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi), v.begin() + static_cast<long>(lo));
  return swaps;
}

class Suite {
 public:
  explicit Suite(const ValidateOptions& o) : opts_(o), rng_(o.seed) {}

  void add(const std::string& name, double observed, double expected, double deviation, double tolerance) {
    const double tol = tolerance * opts_.tol_scale;
    results_.push_back({name, observed, expected, deviation, tol, deviation <= tol});
  }
  void add_abs(const std::string& name, double observed, double expected, double tolerance) {
    add(name, observed, expected, std::abs(observed - expected), tolerance);
  }
  // Runs an oracle, recording a failure if it throws.
  void guard(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      results_.push_back({name + " [error: " + e.what() + "]", std::nan(""), std::nan(""), std::nan(""), 0.0, false});
    }
  }

  Rng& rng() { return rng_; }
  const ValidateOptions& opts() const { return opts_; }
  std::vector<OracleResult> take() { return std::move(results_); }

 private:
  ValidateOptions opts_;
  Rng rng_;
  std::vector<OracleResult> results_;
};

void marginal_oracles(Suite& s) {
  s.guard("marginals.density_integrates_to_one", [&] {
    const WeibullMarginald m{3.0, 0.7};
    const double v = tail_integral(0.0, [&](double x) { return density(x, m); }, kTight, 3.0).value;
    s.add_abs("marginals.density_integrates_to_one", v, 1.0, 1e-8);
  });
  s.guard("marginals.log_density_consistency", [&] {
    double worst = 0.0;
    const WeibullMarginald fixed{2.0, 0.4};
    worst = std::abs(std::exp(log_density(0.5, fixed)) / density(0.5, fixed) - 1.0);
    for (int i = 0; i < 100; ++i) {
      const WeibullMarginald m{uniform(s.rng(), 0.2, 5.0), uniform(s.rng(), 0.3, 3.0)};
      const double x = uniform(s.rng(), 0.01, 10.0);
      const double d = density(x, m);
      if (d > 0.0) worst = std::max(worst, std::abs(std::exp(log_density(x, m)) / d - 1.0));
    }
    s.add("marginals.log_density_consistency", worst, 0.0, worst, 1e-14);
  });
  s.guard("marginals.quantile_round_trip", [&] {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const WeibullMarginald m{uniform(s.rng(), 0.2, 5.0), uniform(s.rng(), 0.3, 3.0)};
      const double u = uniform(s.rng(), 1e-6, 1.0 - 1e-6);
      worst = std::max(worst, std::abs(survival(quantile(u, m), m) - u));
    }
    s.add("marginals.quantile_round_trip", worst, 0.0, worst, 1e-12);
  });
  s.guard("marginals.density_is_survival_derivative", [&] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const WeibullMarginald m{uniform(s.rng(), 0.5, 3.0), uniform(s.rng(), 0.4, 2.0)};
      const double x = quantile(uniform(s.rng(), 0.05, 0.95), m);
      const double h = 1e-5 * x;
      const double fd = -(survival(x + h, m) - survival(x - h, m)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd / density(x, m) - 1.0));
    }
    s.add("marginals.density_is_survival_derivative", worst, 0.0, worst, 1e-6);
  });
  s.guard("marginals.link_scale_example", [&] {
    LinkSpec spec = LinkSpec::zeros({"age", "surgery"});
    spec.coefficients << 0.087, -1.316;
    s.add_abs("marginals.link_scale_example", link_scale(spec, Eigen::Vector2d(50.0, 1.0)), std::exp(3.034), 1e-12);
  });
}

void copula_oracles(Suite& s) {
  s.guard("copula.independence_limit", [&] {
    // Clayton branch evaluated just above theta = 1, not the dedicated product branch.
    const Association near{1.0 + 1e-8, 1e-12};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double s1 = uniform(s.rng(), 1e-3, 1.0), s2 = uniform(s.rng(), 1e-3, 1.0), s3 = uniform(s.rng(), 1e-3, 1.0);
      worst = std::max(worst, std::abs(trivariate_survival(s1, s2, s3, near) - s1 * s2 * s3));
      worst = std::max(worst, std::abs(bivariate_survival(s2, s3, near) - s2 * s3));
    }
    s.add("copula.independence_limit", worst, 0.0, worst, 1e-6);
  });
  s.guard("copula.bivariate_is_trivariate_margin", [&] {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Association a{uniform(s.rng(), 1.0, 6.0)};
      const double s2 = uniform(s.rng(), 1e-3, 1.0), s3 = uniform(s.rng(), 1e-3, 1.0);
      worst = std::max(worst, std::abs(bivariate_survival(s2, s3, a) - trivariate_survival(1.0, s2, s3, a)));
    }
    s.add("copula.bivariate_is_trivariate_margin", worst, 0.0, worst, 1e-15);
  });
  s.guard("copula.neg_partial_2_finite_difference", [&] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double x2 = quantile(uniform(s.rng(), 0.05, 0.95), p.second);
      const double x3 = quantile(uniform(s.rng(), 0.05, 0.95), p.third);
      const double h = 1e-5 * x2;
      const double fd = -(pair_survival(x2 + h, x3, p) - pair_survival(x2 - h, x3, p)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd / neg_partial_2(x2, x3, p) - 1.0));
    }
    s.add("copula.neg_partial_2_finite_difference", worst, 0.0, worst, 1e-6);
  });
  s.guard("copula.density_mixed_difference", [&] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double x2 = quantile(uniform(s.rng(), 0.05, 0.95), p.second);
      const double x3 = quantile(uniform(s.rng(), 0.05, 0.95), p.third);
      const double h2 = 1e-3 * x2, h3 = 1e-3 * x3;
      const double fd = (pair_survival(x2 + h2, x3 + h3, p) - pair_survival(x2 + h2, x3 - h3, p) -
                         pair_survival(x2 - h2, x3 + h3, p) + pair_survival(x2 - h2, x3 - h3, p)) /
                        (4.0 * h2 * h3);
      worst = std::max(worst, std::abs(fd / bivariate_density(x2, x3, p) - 1.0));
    }
    s.add("copula.density_mixed_difference", worst, 0.0, worst, 1e-4);
  });
  s.guard("copula.density_normalization", [&] {
    double worst = 0.0, last = 0.0;
    for (int i = 0; i < 3; ++i) {
      last = bivariate_density_mass(random_pair(s.rng()));
      worst = std::max(worst, std::abs(last - 1.0));
    }
    s.add("copula.density_normalization", last, 1.0, worst, 1e-6);
  });
  s.guard("copula.diagonal_integrand_sign", [&] {
    double largest = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const BivariatePaird p = random_pair(s.rng(), 1.0, 8.0);
      largest = std::max(largest, diagonal_integrand(uniform(s.rng(), 1e-3, 10.0), p));
    }
    s.add("copula.diagonal_integrand_sign", largest + 0.0, 0.0, largest > 0.0 ? largest : 0.0, 0.0);
  });
  s.guard("copula.kendall_tau_theta_3", [&] {
    const Eigen::MatrixXd u = sample_clayton_uniforms(3.0, 2, 100000, s.rng()());
    const double tau = kendall_tau_sample(u.col(0), u.col(1));
    s.add_abs("copula.kendall_tau_theta_3", tau, kendall_tau(Association{3.0}), 0.01);
  });
}

void integrate_oracles(Suite& s) {
  s.guard("integrate.exponential_tail", [&] {
    const double v = tail_integral(1.0, [](double x) { return std::exp(-x); }, kTight).value;
    s.add_abs("integrate.exponential_tail", v, std::exp(-1.0), 1e-10);
  });
  s.guard("integrate.weibull_tail", [&] {
    const double g = 0.7, t = 0.3;
    const double v =
        tail_integral(t, [&](double x) { return g * std::pow(x, g - 1.0) * std::exp(-std::pow(x, g)); }, kTight).value;
    s.add_abs("integrate.weibull_tail", v, std::exp(-std::pow(t, g)), 1e-10);
  });
  s.guard("integrate.diagonal_independent_exponentials", [&] {
    const BivariatePaird p{WeibullMarginald{1.0, 1.0}, WeibullMarginald{1.0, 1.0}, Association{1.0}};
    const double v = tail_integral(0.0, [&](double x) { return diagonal_integrand(x, p); }, kTight).value;
    s.add_abs("integrate.diagonal_independent_exponentials", v, -0.5, 1e-10);
  });
}

void likelihood_oracles(Suite& s) {
  const BivariatePaird unit{WeibullMarginald{1.0, 1.0}, WeibullMarginald{1.0, 1.0}, Association{1.0}};
  const WeibullMarginald unit1{1.0, 1.0};
  s.guard("likelihood.case4_weight_t0", [&] {
    const double v = std::exp(censored_term(0.0, unit1, unit, kTight).log_bracket);
    s.add_abs("likelihood.case4_weight_t0", v, 1.5, 1e-8);
  });
  s.guard("likelihood.case4_weight_t1", [&] {
    const double v = std::exp(censored_term(1.0, unit1, unit, kTight).log_bracket);
    s.add_abs("likelihood.case4_weight_t1", v, std::exp(-1.0) + 0.5 * std::exp(-2.0), 1e-8);
  });
  s.guard("likelihood.ordered_tail_exponential", [&] {
    s.add_abs("likelihood.ordered_tail_exponential", ordered_tail_probability(1.0, unit, kTight),
              0.5 * std::exp(-2.0), 1e-8);
  });
  s.guard("likelihood.ordered_tail_derivative", [&] {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double t = quantile(0.5, p.second);
      const double h = 1e-4 * t;
      const double fd =
          -(ordered_tail_probability(t + h, p, kTight) - ordered_tail_probability(t - h, p, kTight)) / (2.0 * h);
      const double direct =
          tail_integral(t, [&](double x3) { return bivariate_density(t, x3, p); }, kTight, p.third.scale).value;
      worst = std::max(worst, std::abs(fd / direct - 1.0));
    }
    s.add("likelihood.ordered_tail_derivative", worst, 0.0, worst, 1e-4);
  });
  s.guard("likelihood.ordered_tail_vs_double_quadrature", [&] {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double t = quantile(uniform(s.rng(), 0.3, 0.9), p.second);
      worst = std::max(worst, std::abs(ordered_tail_probability(t, p) - ordered_tail_by_density(t, p, kTight)));
    }
    s.add("likelihood.ordered_tail_vs_double_quadrature", worst, 0.0, worst, 1e-5);
  });
  s.guard("likelihood.ordered_tail_vs_monte_carlo", [&] {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double t = quantile(uniform(s.rng(), 0.3, 0.9), p.second);
      const double value = ordered_tail_probability(t, p);
      const McEstimate mc = mc_prob_ordered_tail(t, p, s.opts().mc_samples, s.rng()());
      worst = std::max(worst, std::abs(value - mc.probability) / binomial_se(value, mc.samples));
    }
    s.add("likelihood.ordered_tail_vs_monte_carlo (SE units)", worst, 0.0, worst, 3.5);
  });
  s.guard("likelihood.case3_monotone_in_x3", [&] {
    double rise = 0.0;
    for (int i = 0; i < 20; ++i) {
      const BivariatePaird p = random_pair(s.rng());
      const double x2 = quantile(uniform(s.rng(), 0.1, 0.9), p.second);
      double prev = neg_partial_2(x2, x2, p);
      for (int k = 1; k <= 40; ++k) {
        const double v = neg_partial_2(x2, x2 * (1.0 + 0.1 * k), p);
        rise = std::max(rise, v - prev);
        prev = v;
      }
    }
    s.add("likelihood.case3_monotone_in_x3", rise + 0.0, 0.0, rise > 0.0 ? rise : 0.0, 0.0);
  });
  s.guard("likelihood.gradient_stencil_agreement", [&] {
    SimScenario sc;
    sc.n = 200;
    sc.seed = s.rng()();
    sc.censoring = {8.0, 8.0};
    Eigen::VectorXd v = sc.params.to_vector();
    v << 2.0, 0.05, -0.5, 0.5, 0.05, 0.2, -0.1, 0.8, 0.05, 0.2, -0.1, 0.5;
    sc.params = sc.params.with_vector(v);
    const auto data = simulate(sc).cases;
    const Eigen::VectorXd probe = v * 1.05;
    const ModelParams at = sc.params.with_vector(probe);
    const Eigen::VectorXd g2 = numerical_gradient(at, data);
    auto f = [&](const Eigen::VectorXd& x) { return log_likelihood(sc.params.with_vector(x), data); };
    const Eigen::VectorXd g4 = four_point_gradient(f, probe, relative_steps(probe, 1e-4, 1e-5));
    const double rel = (g2 - g4).cwiseAbs().maxCoeff() / g4.cwiseAbs().maxCoeff();
    s.add("likelihood.gradient_stencil_agreement", rel, 0.0, rel, 1e-4);
  });
}

void simulation_oracles(Suite& s) {
  s.guard("simulation.uniform_margin_ks", [&] {
    const Eigen::MatrixXd u = sample_clayton_uniforms(2.0, 3, 100000, s.rng()());
    const double d = ks_uniform_statistic(u.col(0));
    s.add("simulation.uniform_margin_ks", d, 0.0, d, ks_critical_1pct(100000));
  });
  s.guard("simulation.independence_tau", [&] {
    const Eigen::MatrixXd u = sample_clayton_uniforms(1.0 + 1e-6, 2, 100000, s.rng()());
    s.add_abs("simulation.independence_tau", kendall_tau_sample(u.col(0), u.col(1)), 0.0, 0.01);
  });
  s.guard("simulation.kendall_tau_theta_1_5", [&] {
    const Eigen::MatrixXd u = sample_clayton_uniforms(1.5, 2, 100000, s.rng()());
    s.add_abs("simulation.kendall_tau_theta_1_5", kendall_tau_sample(u.col(0), u.col(1)),
              kendall_tau(Association{1.5}), 0.01);
  });
  s.guard("simulation.empirical_copula", [&] {
    const double theta = 2.5;
    const std::size_t n = 100000;
    const Eigen::MatrixXd u = sample_clayton_uniforms(theta, 2, n, s.rng()());
    double worst = 0.0;
    for (double a : {0.25, 0.5, 0.75})
      for (double b : {0.25, 0.5, 0.75}) {
        const double p = bivariate_survival(a, b, Association{theta});
        const double hits = static_cast<double>(((u.col(0).array() < a) && (u.col(1).array() < b)).count());
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        worst = std::max(worst, std::abs(hits / static_cast<double>(n) - p) / se);
      }
    s.add("simulation.empirical_copula (SE units)", worst, 0.0, worst, 3.5);
  });
  s.guard("simulation.trivariate_survival", [&] {
    SimScenario sc;
    sc.n = 100000;
    sc.seed = s.rng()();
    sc.reject_disordered = false;
    sc.covariates = {50.0, 50.0, 0.0, 1.0, 1.0};
    Eigen::VectorXd v = sc.params.to_vector();
    v << 2.0, 0.02, 0.0, 0.7, 0.01, 0.0, 0.1, 1.3, 0.03, 0.0, -0.2, 0.9;
    sc.params = sc.params.with_vector(v);
    const auto latent = sample_trivariate(sc);
    const Covariates& cov = latent.front().covariates;
    const std::array<WeibullMarginald, 3> m{sc.params.marginal(1, cov), sc.params.marginal(2, cov),
                                            sc.params.marginal(3, cov)};
    const std::array<double, 3> a{quantile(0.6, m[0]), quantile(0.5, m[1]), quantile(0.7, m[2])};
    const double p = trivariate_survival(0.6, 0.5, 0.7, sc.params.association);
    std::size_t joint = 0;
    std::array<std::size_t, 3> above{};
    std::array<double, 3> med{quantile(0.5, m[0]), quantile(0.5, m[1]), quantile(0.5, m[2])};
    for (const auto& l : latent) {
      joint += (l.x1 > a[0] && l.x2 > a[1] && l.x3 > a[2]) ? 1 : 0;
      above[0] += l.x1 > med[0];
      above[1] += l.x2 > med[1];
      above[2] += l.x3 > med[2];
    }
    const double nn = static_cast<double>(sc.n);
    const double z = std::abs(static_cast<double>(joint) / nn - p) / std::sqrt(p * (1.0 - p) / nn);
    s.add("simulation.trivariate_survival (SE units)", static_cast<double>(joint) / nn, p, z, 3.5);
    double worst = 0.0;
    for (std::size_t k : above) worst = std::max(worst, std::abs(static_cast<double>(k) / nn - 0.5) / std::sqrt(0.25 / nn));
    s.add("simulation.margin_medians (SE units)", worst, 0.0, worst, 3.5);
  });
  s.guard("simulation.records_round_trip", [&] {
    SimScenario sc;
    sc.n = 200;
    sc.seed = s.rng()();
    sc.censoring = {30.0, 300.0};
    Eigen::VectorXd v = sc.params.to_vector();
    v << 2.0, 0.05, -0.5, 0.9, 0.06, 0.2, -0.1, 1.1, 0.07, 0.2, -0.1, 0.8;
    sc.params = sc.params.with_vector(v);
    const auto records = to_records(simulate(sc).cases);
    std::stringstream buf;
    write_records(buf, records);
    const ParseResult parsed = parse_records(buf);
    const FilterResult kept = filter_records(parsed.records);
    const double lost = static_cast<double>(parsed.issues.size() + kept.excluded.size() + (records.size() - kept.kept.size()));
    s.add("simulation.records_round_trip", static_cast<double>(kept.kept.size()), static_cast<double>(sc.n), lost, 0.0);
  });
}

}  // namespace

double kendall_tau_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("kendall_tau_sample: need two equal columns of length >= 2");
  const auto n = static_cast<std::size_t>(a.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(static_cast<Eigen::Index>(i)) < a(static_cast<Eigen::Index>(j));
  });
  std::vector<double> seq(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = b(static_cast<Eigen::Index>(order[i]));
  const double discordant = static_cast<double>(merge_count(seq, buf, 0, n));
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return (pairs - 2.0 * discordant) / pairs;
}

double ks_uniform_statistic(Eigen::VectorXd sample) {
  if (sample.size() == 0) throw DomainError("ks_uniform_statistic: empty sample");
  std::sort(sample.data(), sample.data() + sample.size());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    const double u = sample(i);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return 1.628 / (rn + 0.12 + 0.11 / rn);
}

double ordered_tail_by_density(double t, const BivariatePaird& pair, const QuadratureSpec& q) {
  auto inner = [&](double x2) {
    return require_converged(
        tail_integral(x2, [&](double x3) { return bivariate_density(x2, x3, pair); }, q, pair.third.scale),
        "ordered_tail_by_density inner");
  };
  return require_converged(tail_integral(t, inner, q, pair.second.scale), "ordered_tail_by_density outer");
}

double bivariate_density_mass(const BivariatePaird& pair, const QuadratureSpec& q) {
  // Split each inner integral where X3 sits at the same marginal quantile as x2.
  auto inner = [&](double x2) {
    const double s = survival(x2, pair.second);
    if (!(s > 0.0 && s < 1.0)) return 0.0;
    const double split = quantile(s, pair.third);
    auto f = [&](double x3) { return x3 > 0.0 ? bivariate_density(x2, x3, pair) : 0.0; };
    const double lower = integrate_interval(f, 0.0, split, q).value;
    return lower + tail_integral(split, f, q, pair.third.scale).value;
  };
  return tail_integral(0.0, inner, q, pair.second.scale).value;
}

std::vector<OracleResult> run_oracles(const ValidateOptions& options) {
  if (!(options.tol_scale > 0.0)) throw DomainError("validate: tolerance scale must be positive");
  if (options.mc_samples < 10000) throw DomainError("validate: need at least 1e4 Monte Carlo samples");
  Suite s(options);
  marginal_oracles(s);
  copula_oracles(s);
  integrate_oracles(s);
  likelihood_oracles(s);
  simulation_oracles(s);
  return s.take();
}

void write_oracle_report(std::ostream& out, const std::vector<OracleResult>& results) {
  std::size_t failed = 0;
  char buf[512];
  for (const auto& r : results) {
    failed += r.passed ? 0 : 1;
    std::snprintf(buf, sizeof buf, "%s  %-52s observed=%.10g expected=%.10g deviation=%.3e tol=%.3e\n",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.observed, r.expected, r.deviation, r.tolerance);
    out << buf;
  }
  out << results.size() - failed << " of " << results.size() << " oracles passed\n";
}

}  // namespace semicomp
