#include <cmath>

#include "doctest.h"
#include "omit/imputation.hpp"
#include "omit/regression.hpp"
#include "omit/rng.hpp"
#include "omit/simulation.hpp"
#include "omit/special.hpp"

using namespace omit;

namespace {

// Small table with three missing treatments on a quadratic surface.
ObservationTable toy_table() {
  const RandomStream s(11);
  const int n = 80;
  ObservationTable table;
  table.X.resize(n, 2);
  table.y.resize(n);
  table.t.resize(n);
  table.r.resize(n);
  for (int i = 0; i < n; ++i) {
    table.X(i, 0) = s.normal(5 * i);
    table.X(i, 1) = s.normal(5 * i + 1);
    const int t = s.bernoulli(0.4, 5 * i + 2) ? 1 : 0;
    const double x2sq = table.X(i, 1) * table.X(i, 1);
    table.y(i) = (t == 1 ? 2.0 + table.X(i, 0) + 4.0 * x2sq : 1.0 + table.X(i, 0) + x2sq) +
                 s.normal(5 * i + 3);
    table.r(i) = i % 4 == 0 ? 1 : 0;
    table.t(i) = table.r(i) == 1 ? ObservationTable::kMissing : t;
  }
  table.validate();
  return table;
}

}  // namespace

TEST_CASE("sharpened probability closed-form cases") {
  CHECK(sharpened_probability(0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  // e = 0.4 with a treated density twice the control density.
  CHECK(sharpened_probability(0.4, 2.0, 1.0) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  // A zero control density pins the unit to treated (up to the clip).
  CHECK(sharpened_probability(0.4, 1.0, 0.0) == doctest::Approx(1.0 - 1e-6));
  CHECK(sharpened_probability(0.4, 0.0, 1.0) == doctest::Approx(1e-6));
  // Both densities underflowing falls back to the propensity alone.
  CHECK(sharpened_probability(0.37, 0.0, 0.0) == doctest::Approx(0.37));
}

TEST_CASE("sharpened probability properties over random inputs") {
  const RandomStream s(88);
  int cases = 0;
  for (int c = 0; c < 1200; ++c) {
    const double e = s.uniform(4 * c);
    const double f1 = std::exp(3.0 * s.normal(4 * c + 1));
    const double f0 = std::exp(3.0 * s.normal(4 * c + 2));
    const double q = sharpened_probability(e, f1, f0);
    REQUIRE(q >= 1e-6);
    REQUIRE(q <= 1.0 - 1e-6);
    // Scale invariance: only the density ratio matters.
    const double k = std::exp(2.0 * s.normal(4 * c + 3));
    CHECK(sharpened_probability(e, k * f1, k * f0) == doctest::Approx(q).epsilon(1e-9));
    // Monotone in e and in the likelihood ratio.
    if (e < 0.99) CHECK(sharpened_probability(std::min(1.0, e + 0.01), f1, f0) >= q - 1e-12);
    CHECK(sharpened_probability(e, f1 * 1.5, f0) >= q - 1e-12);
    CHECK(sharpened_probability(e, f1, f0 * 1.5) <= q + 1e-12);
    ++cases;
  }
  CHECK(cases >= 1000);
}

TEST_CASE("outcome separation drives the probability to the boundary") {
  // Arms are 40 apart with sd 0.1, so the realized outcome identifies the
  // treatment almost surely.
  const double x_effect = 3.0;
  const double f1_hi = gaussian_density(45.0, 40.0 + x_effect, 0.1);
  const double f0_hi = gaussian_density(45.0, x_effect, 0.1);
  CHECK(sharpened_probability(0.5, f1_hi, f0_hi) == doctest::Approx(1.0 - 1e-6));
  const double f1_lo = gaussian_density(5.0, 40.0 + x_effect, 0.1);
  const double f0_lo = gaussian_density(5.0, x_effect, 0.1);
  CHECK(sharpened_probability(0.5, f1_lo, f0_lo) == doctest::Approx(1e-6));
}

TEST_CASE("plans carry valid probabilities and observed treatments") {
  const ObservationTable table = toy_table();
  const ObservationTable cc = table.complete_case_view();
  const FittedPropensityModel ps = fit_probit(cc.X, cc.t);
  const Eigen::VectorXd e_hat = ps.predict(table.X);
  const FittedOutcomeModel ym = fit_outcome(cc, DesignSpec(DesignSpec::Kind::correct, 2));

  for (const ImputationPlan& plan :
       {plan_omit(table, e_hat, ym, 5, 123), plan_naive(table, e_hat, 5, 123),
        plan_naive_plus_y(table, 5, 123)}) {
    REQUIRE(plan.q_hat.size() == table.n());
    for (int i = 0; i < table.n(); ++i) {
      if (table.r(i) == 1) {
        CHECK(plan.q_hat(i) >= 1e-6);
        CHECK(plan.q_hat(i) <= 1.0 - 1e-6);
      } else {
        CHECK(plan.q_hat(i) == static_cast<double>(table.t(i)));
      }
    }
    CHECK(plan.M == 5);
    CHECK(plan.n_imputable() == table.n_missing());
  }
}

TEST_CASE("a flat outcome model reduces the plan to the propensity") {
  const ObservationTable table = toy_table();
  const ObservationTable cc = table.complete_case_view();
  const FittedPropensityModel ps = fit_probit(cc.X, cc.t);
  const Eigen::VectorXd e_hat = ps.predict(table.X);

  // Zero treatment effect and identical densities in both arms: f1 = f0, so
  // q collapses to e_hat.
  FittedOutcomeModel flat;
  flat.design_spec = DesignSpec(DesignSpec::Kind::interaction);
  flat.coef = Eigen::VectorXd::Zero(flat.design_spec.width(table.d()));
  flat.sigma = 1.0;

  const ImputationPlan omit_plan = plan_omit(table, e_hat, flat, 3, 9);
  const ImputationPlan naive_plan = plan_naive(table, e_hat, 3, 9);
  for (int i = 0; i < table.n(); ++i) {
    CHECK(omit_plan.q_hat(i) == doctest::Approx(naive_plan.q_hat(i)).epsilon(1e-12));
  }
}

TEST_CASE("plan rejects mismatched propensity vectors") {
  const ObservationTable table = toy_table();
  const Eigen::VectorXd bad = Eigen::VectorXd::Constant(table.n() - 1, 0.5);
  const ObservationTable cc = table.complete_case_view();
  const FittedOutcomeModel ym = fit_outcome(cc, DesignSpec(DesignSpec::Kind::correct, 2));
  CHECK_THROWS(plan_omit(table, bad, ym, 2, 1));
  CHECK_THROWS(plan_naive(table, bad, 2, 1));
}

TEST_CASE("materialize is deterministic and preserves observed treatments") {
  const ObservationTable table = toy_table();
  const Eigen::VectorXd e_hat = Eigen::VectorXd::Constant(table.n(), 0.4);
  ImputationPlan plan = plan_naive(table, e_hat, 4, 777);

  const std::vector<CompletedDataset> a = materialize(plan);
  const std::vector<CompletedDataset> b = materialize(plan);
  REQUIRE(a.size() == 4);
  for (int m = 0; m < 4; ++m) {
    CHECK(a[m].imputation_index == m + 1);
    CHECK(a[m].t_star == b[m].t_star);
    for (int i = 0; i < table.n(); ++i) {
      CHECK(a[m].t_star(i) != ObservationTable::kMissing);
      if (table.r(i) == 0) CHECK(a[m].t_star(i) == table.t(i));
    }
  }
  // A different seed changes at least one imputed draw.
  plan.seed = 778;
  const std::vector<CompletedDataset> c = materialize(plan);
  bool any_diff = false;
  for (int m = 0; m < 4 && !any_diff; ++m) any_diff = c[m].t_star != a[m].t_star;
  CHECK(any_diff);
}

TEST_CASE("materialized draw frequencies match q") {
  ObservationTable table;
  const int n = 4;
  table.X = Eigen::MatrixXd::Zero(n, 1);
  table.y = Eigen::VectorXd::Zero(n);
  table.t = Eigen::VectorXi::Constant(n, ObservationTable::kMissing);
  table.t(0) = 1;
  table.r = Eigen::VectorXi::Ones(n);
  table.r(0) = 0;

  ImputationPlan plan;
  plan.base = &table;
  plan.q_hat = Eigen::VectorXd::Constant(n, 0.5);
  plan.q_hat(0) = 1.0;
  plan.q_hat(2) = 0.2;
  plan.M = 10000;
  plan.seed = 5150;

  const std::vector<CompletedDataset> draws = materialize(plan);
  double f1 = 0.0, f2 = 0.0;
  for (const CompletedDataset& d : draws) {
    f1 += d.t_star(1);
    f2 += d.t_star(2);
  }
  CHECK(f1 / plan.M == doctest::Approx(0.5).epsilon(0.04));
  CHECK(f2 / plan.M == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("outcome-assisted imputation matches the truth more often than the naive plan") {
  // Strong treatment effect, tight noise: the realized outcome is highly
  // informative about the missing treatment.
  ScenarioConfig cfg;
  cfg.beta_y = 7.0;
  cfg.sigma = 1.0;
  cfg.miss_level = 0.3;
  cfg.n = 500;
  const Population pop = generate_population(cfg, 42);

  int reps = 0;
  double omit_match = 0.0, naive_match = 0.0;
  long total_missing = 0;
  for (int rep = 0; rep < 120; ++rep) {
    const MaskedDraw draw = assign_and_mask(pop, cfg, rep);
    if (draw.table.n_missing() == 0) continue;
    const ObservationTable cc = draw.table.complete_case_view();
    const FittedPropensityModel ps = fit_probit(cc.X.col(1), cc.t);
    const Eigen::VectorXd e_hat = ps.predict(draw.table.X.col(1));
    const FittedOutcomeModel ym = fit_outcome(cc, DesignSpec(DesignSpec::Kind::correct, 2));

    const CompletedDataset om = materialize(plan_omit(draw.table, e_hat, ym, 1, 1000 + rep))[0];
    const CompletedDataset nv = materialize(plan_naive(draw.table, e_hat, 1, 1000 + rep))[0];
    for (int i = 0; i < draw.table.n(); ++i) {
      if (draw.table.r(i) != 1) continue;
      ++total_missing;
      omit_match += om.t_star(i) == draw.t_true(i);
      naive_match += nv.t_star(i) == draw.t_true(i);
    }
    ++reps;
  }
  REQUIRE(reps >= 100);
  omit_match /= total_missing;
  naive_match /= total_missing;
  // Sharpened probabilities should recover the masked treatment far more
  // reliably than propensity-only draws.
  CHECK(omit_match > naive_match + 0.15);
  CHECK(omit_match > 0.85);
}
