#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "unitreg/links.hpp"
#include "unitreg/mle.hpp"
#include "unitreg/rng.hpp"
#include "unitreg/simulate.hpp"

using namespace unitreg;

namespace {

// 97 interior draws plus 4 exact ones, the forced-theta configuration
Dataset dataset_97_4(unsigned seed) {
  Rng rng(seed);
  Eigen::VectorXd y(101);
  for (int i = 0; i < 97; ++i) {
    double v = rng.beta(0.75 * 12.0, 0.25 * 12.0);
    while (v <= 0.0 || v >= 1.0) v = rng.beta(0.75 * 12.0, 0.25 * 12.0);
    y[i] = v;
  }
  for (int i = 97; i < 101; ++i) y[i] = 1.0;
  return make_dataset(y, Eigen::MatrixXd(101, 0));
}

GenConfig single_endpoint_config(unsigned seed, int n = 200) {
  GenConfig cfg;
  cfg.kind = ModelKind::model3;
  cfg.n = n;
  cfg.n_predictors = 2;
  cfg.b = Eigen::VectorXd(3);
  cfg.b << 1.2, 0.5, -0.4;
  cfg.d = Eigen::VectorXd(1);
  cfg.d << std::log(10.0);
  cfg.endpoint_mechanism = EndpointMechanism::explicit_probs;
  cfg.p0 = 0.0;
  cfg.p1 = 0.08;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("mle");

TEST_CASE("observed information on a quadratic log-likelihood") {
  Eigen::VectorXd v(3);
  v << 0.5, 2.0, 7.0;
  ObjectiveFn ll = [&](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s -= 0.5 * x[j] * x[j] / v[j];
    return s;
  };
  Eigen::VectorXd at(3);
  at << 0.3, -1.0, 2.0;
  const Eigen::MatrixXd info = observed_information(ll, at);
  for (int j = 0; j < 3; ++j) {
    CHECK(info(j, j) == doctest::Approx(1.0 / v[j]).epsilon(1e-8));
    for (int l = 0; l < 3; ++l)
      if (l != j) CHECK(info(j, l) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  }
}

TEST_CASE("observed information matches the analytic beta Fisher information") {
  // scalar classic fit; at the optimum the observed information equals the
  // expected information, with trigamma as the independent oracle
  Rng rng(99);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    double v = rng.beta(0.6 * 8.0, 0.4 * 8.0);
    while (v <= 0.0 || v >= 1.0) v = rng.beta(0.6 * 8.0, 0.4 * 8.0);
    y[i] = v;
  }
  Dataset d = make_dataset(y, Eigen::MatrixXd(400, 0));
  ModelSpec s;
  s.kind = ModelKind::classic;
  FitResult fr = fit(s, d);
  REQUIRE(fr.converged);

  const double mu = apply_inverse(Link::logit, fr.estimates[0]);
  const double phi = std::exp(fr.estimates[1]);
  const double a = mu * phi, b = (1.0 - mu) * phi;
  const double ta = oracle::trigamma(a), tb = oracle::trigamma(b),
               tp = oracle::trigamma(phi);
  // expected information in (mu, phi), then chain rule to (logit mu, log phi)
  const double i_mm = phi * phi * (ta + tb);
  const double i_mp = phi * (mu * ta - (1.0 - mu) * tb);
  const double i_pp = mu * mu * ta + (1.0 - mu) * (1.0 - mu) * tb - tp;
  const double jm = mu * (1.0 - mu), jp = phi;
  Eigen::MatrixXd expected(2, 2);
  expected << 400 * i_mm * jm * jm, 400 * i_mp * jm * jp, 400 * i_mp * jm * jp,
      400 * i_pp * jp * jp;

  ModelDesign design = build_design(s, d);
  ObjectiveFn ll = [&](const Eigen::VectorXd& p) { return loglik(design, p); };
  const Eigen::MatrixXd info = observed_information(ll, fr.estimates);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(info(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-4));
}

TEST_CASE("intercept-only model2: mixing weight equals the interior fraction") {
  Dataset d = dataset_97_4(7);
  ModelSpec s;
  s.kind = ModelKind::model2;
  FitResult fr = fit(s, d);
  REQUIRE(fr.converged);
  const int a0 = fr.index_of("a0");
  CHECK(fr.estimates[a0] == doctest::Approx(3.1884).epsilon(2e-4));
  CHECK(apply_inverse(Link::logit, fr.estimates[a0]) ==
        doctest::Approx(97.0 / 101.0).epsilon(1e-6));
}

TEST_CASE("augmented fit: intercept-only endpoint model recovers the log odds") {
  Dataset d = dataset_97_4(11);
  ModelSpec s;
  s.kind = ModelKind::augmented;
  FitResult fr = fit(s, d);
  REQUIRE(fr.converged);
  // endpoint probability model: logit(4/101), the mixing weight's sign flip
  CHECK(fr.estimates[fr.index_of("p1_0")] ==
        doctest::Approx(std::log(4.0 / 97.0)).epsilon(1e-4));
}

TEST_CASE("replication: model2 with masked design reproduces the augmented fit") {
  GenResult gen = gen_cross_section(single_endpoint_config(101));
  REQUIRE(gen.data.partition.n0() == 0);
  REQUIRE(gen.data.partition.n1() > 2);

  // polish both optima well past the default tolerance so the curvature
  // matrices are compared at matching points
  FitOptions tight;
  tight.optim.grad_tol = 1e-9;
  tight.optim.f_rel_tol = 1e-15;

  ModelSpec aug;
  aug.kind = ModelKind::augmented;
  aug.mu_cols = {1, 2};
  aug.theta_cols = {1, 2};
  FitResult fa = fit(aug, gen.data, tight);
  REQUIRE(fa.converged);

  ModelSpec m2;
  m2.kind = ModelKind::model2;
  m2.mu_cols = {1, 2};
  m2.theta_cols = {1, 2};
  m2.theta_regression = true;
  m2.masked_mu_design = true;
  FitResult f2 = fit(m2, gen.data, tight);
  REQUIRE(f2.converged);

  for (const char* name : {"b0", "b1", "b2", "d0"})
    CHECK(f2.estimates[f2.index_of(name)] ==
          doctest::Approx(fa.estimates[fa.index_of(name)]).epsilon(1e-6));
  // mixing-weight coefficients flip the endpoint-model signs
  for (int j = 0; j < 3; ++j) {
    const std::string a = "a" + std::to_string(j);
    const std::string p = "p1_" + std::to_string(j);
    CHECK(f2.estimates[f2.index_of(a)] ==
          doctest::Approx(-fa.estimates[fa.index_of(p)]).epsilon(1e-6));
  }
  CHECK(f2.aic == doctest::Approx(fa.aic).epsilon(1e-9));
  CHECK(f2.loglik == doctest::Approx(fa.loglik).epsilon(1e-9));

  // Wald statistics for the slope restrictions agree
  Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(2, f2.k);
  r2(0, f2.index_of("b1")) = 1.0;
  r2(0, f2.index_of("a1")) = 1.0;
  r2(1, f2.index_of("b2")) = 1.0;
  r2(1, f2.index_of("a2")) = 1.0;
  Eigen::MatrixXd ra = Eigen::MatrixXd::Zero(2, fa.k);
  ra(0, fa.index_of("b1")) = 1.0;
  ra(0, fa.index_of("p1_1")) = -1.0;
  ra(1, fa.index_of("b2")) = 1.0;
  ra(1, fa.index_of("p1_2")) = -1.0;
  const TestResult w2 = wald_test(f2, r2, Eigen::VectorXd::Zero(2));
  const TestResult wa = wald_test(fa, ra, Eigen::VectorXd::Zero(2));
  CHECK(w2.chi2 == doctest::Approx(wa.chi2).epsilon(1e-6));
  CHECK(w2.df == wa.df);
  CHECK(w2.p == doctest::Approx(wa.p).epsilon(1e-6));
}

TEST_CASE("model2 and model3 share the mean and precision optimum") {
  GenResult gen = gen_cross_section(single_endpoint_config(307));
  ModelSpec m3;
  m3.kind = ModelKind::model3;
  m3.mu_cols = {1, 2};
  FitResult f3 = fit(m3, gen.data);
  REQUIRE(f3.converged);

  ModelSpec m2;
  m2.kind = ModelKind::model2;
  m2.mu_cols = {1, 2};
  FitResult f2 = fit(m2, gen.data);
  REQUIRE(f2.converged);

  for (const char* name : {"b0", "b1", "b2", "d0"})
    CHECK(f2.estimates[f2.index_of(name)] ==
          doctest::Approx(f3.estimates[f3.index_of(name)]).epsilon(1e-6));
}

TEST_CASE("estimates are invariant to row order and start perturbation") {
  GenResult gen = gen_cross_section(single_endpoint_config(511, 150));
  ModelSpec m3;
  m3.kind = ModelKind::model3;
  m3.mu_cols = {1, 2};
  FitResult base = fit(m3, gen.data);
  REQUIRE(base.converged);

  // reversed row order
  const int n = gen.data.n();
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    y[i] = gen.data.y[n - 1 - i];
    x.row(i) = gen.data.x_plus.row(n - 1 - i).tail(2);
  }
  FitResult rev = fit(m3, make_dataset(y, x));
  REQUIRE(rev.converged);
  for (int j = 0; j < base.k; ++j)
    CHECK(rev.estimates[j] == doctest::Approx(base.estimates[j]).epsilon(1e-6));

  // perturbed start
  Rng rng(99);
  FitOptions opts;
  Eigen::VectorXd start = base.estimates;
  for (int j = 0; j < start.size(); ++j) start[j] += 0.01 * rng.normal();
  opts.start = start;
  FitResult pert = fit(m3, gen.data, opts);
  REQUIRE(pert.converged);
  for (int j = 0; j < base.k; ++j)
    CHECK(pert.estimates[j] == doctest::Approx(base.estimates[j]).epsilon(1e-6));
}

TEST_CASE("parameter recovery on a model3 simulation") {
  GenConfig cfg = single_endpoint_config(2024, 2000);
  cfg.p0 = 0.01;
  cfg.p1 = 0.04;
  GenResult gen = gen_cross_section(cfg);
  ModelSpec m3;
  m3.kind = ModelKind::model3;
  m3.mu_cols = {1, 2};
  FitResult fr = fit(m3, gen.data);
  REQUIRE(fr.converged);
  const Eigen::VectorXd truth =
      (Eigen::VectorXd(4) << 1.2, 0.5, -0.4, std::log(10.0)).finished();
  for (int j = 0; j < 4; ++j) {
    CAPTURE(j);
    CHECK(std::fabs(fr.estimates[j] - truth[j]) < 3.0 * fr.se[j] + 0.05);
  }
}

TEST_CASE("degenerate outcomes are refused") {
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(5);
  ModelSpec s;
  s.kind = ModelKind::model3;
  CHECK_THROWS_AS(fit(s, make_dataset(zeros, Eigen::MatrixXd(5, 0))),
                  std::invalid_argument);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
  CHECK_THROWS_AS(fit(s, make_dataset(ones, Eigen::MatrixXd(5, 0))),
                  std::invalid_argument);
  Eigen::VectorXd balanced(4);
  balanced << 0, 0, 1, 1;
  CHECK_THROWS_AS(fit(s, make_dataset(balanced, Eigen::MatrixXd(4, 0))),
                  std::invalid_argument);
  Eigen::VectorXd lopsided(4);
  lopsided << 0, 0, 0, 1;
  CHECK_THROWS_AS(fit(s, make_dataset(lopsided, Eigen::MatrixXd(4, 0))),
                  std::invalid_argument);
}

TEST_CASE("estimability violation surfaces instead of silently returning") {
  // 7 of 8 observations at y = 1: the odds terms dominate and the mean
  // parameter runs away; the fit must not report a quiet success
  Eigen::VectorXd y(8);
  y << 1, 1, 1, 1, 1, 1, 1, 0.6;
  Dataset d = make_dataset(y, Eigen::MatrixXd(8, 0));
  ModelSpec s;
  s.kind = ModelKind::model3;
  FitResult fr = fit(s, d);
  CHECK(d.partition.n_beta() < std::abs(d.partition.n0() - d.partition.n1()));
  CHECK(fr.theorem3.global_q == 1);
  const bool surfaced = !fr.converged || fr.theorem3.global_q == 1;
  CHECK(surfaced);
}

TEST_CASE("model4 cap rescues the flagged regime where model3 runs away") {
  // one group with 7 of 8 rows at one, entering through a group dummy; a
  // healthy second group anchors the shared intercept
  Rng rng(400);
  const int n = 28;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  std::vector<int> unit(n);
  for (int i = 0; i < 7; ++i) y[i] = 1.0;
  y[7] = 0.62;
  for (int i = 8; i < n; ++i) {
    double v = rng.beta(0.65 * 10, 0.35 * 10);
    while (v <= 0.0 || v >= 1.0) v = rng.beta(0.65 * 10, 0.35 * 10);
    y[i] = v;
  }
  for (int i = 0; i < n; ++i) {
    unit[i] = i < 8 ? 0 : 1;
    x(i, 0) = i < 8 ? 1.0 : 0.0;  // flagged-group indicator
  }
  Dataset d = make_dataset(y, x, unit);

  ModelSpec m3;
  m3.kind = ModelKind::model3;
  m3.mu_cols = {1};
  FitResult f3 = fit(m3, d);
  // the group coefficient has no finite optimum: 7 odds terms against one
  // interior row push it upward without bound
  const double group_eta = f3.estimates[0] + f3.estimates[1];
  const bool runaway = !f3.converged || group_eta > 10.0;
  CHECK(runaway);

  ModelSpec m4;
  m4.kind = ModelKind::model4;
  m4.mu_cols = {1};
  FitResult f4 = fit(m4, d);
  CHECK(f4.converged);
  CHECK(f4.estimates[0] + f4.estimates[1] < 10.0);
  CHECK(f4.theorem3.q[0] == 1);
  CHECK(f4.theorem3.q[1] == 0);
}

TEST_CASE("wald test mechanics") {
  FitResult fr;
  fr.estimates = (Eigen::VectorXd(2) << 1.0, 2.0).finished();
  fr.vcov = Eigen::MatrixXd::Identity(2, 2) * 0.25;
  Eigen::MatrixXd r(1, 2);
  r << 1.0, 0.0;
  const TestResult t = wald_test(fr, r, Eigen::VectorXd::Zero(1));
  CHECK(t.chi2 == doctest::Approx(4.0));  // (1/0.5)^2
  CHECK(t.df == 1);
  CHECK(t.p == doctest::Approx(chi2_sf(4.0, 1)));

  Eigen::MatrixXd deficient(2, 2);
  deficient << 1.0, 0.0, 2.0, 0.0;
  CHECK_THROWS_AS(wald_test(fr, deficient, Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("likelihood ratio test") {
  FitResult restricted, full;
  restricted.loglik = -100.0;
  restricted.k = 3;
  full.loglik = -97.51;
  full.k = 6;
  const TestResult t = lr_test(restricted, full);
  CHECK(t.chi2 == doctest::Approx(4.98));
  CHECK(t.df == 3);
  CHECK(t.p == doctest::Approx(0.1733).epsilon(1e-3));

  const TestResult same = lr_test(restricted, restricted);
  CHECK(same.chi2 == doctest::Approx(0.0));
  CHECK(same.p == doctest::Approx(1.0));
}

TEST_CASE("aic formula") {
  FitResult fr;
  fr.k = 0;
  fr.loglik = 0.0;
  CHECK(aic(fr) == doctest::Approx(0.0));
  fr.k = 5;
  fr.loglik = 117.44;
  CHECK(aic(fr) == doctest::Approx(-224.88));
}

TEST_CASE("nesting check") {
  ModelSpec small;
  small.kind = ModelKind::model2;
  small.mu_cols = {1};
  ModelSpec big = small;
  big.mu_cols = {1, 2};
  big.theta_regression = true;
  big.theta_cols = {1};
  CHECK(is_nested(small, big));
  CHECK(!is_nested(big, small));
  ModelSpec other;
  other.kind = ModelKind::model3;
  other.mu_cols = {1};
  CHECK(!is_nested(small, other));
}

TEST_SUITE_END();
