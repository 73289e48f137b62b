#include <Eigen/Cholesky>
#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "omit/regression.hpp"
#include "omit/rng.hpp"
#include "omit/special.hpp"

using namespace omit;

namespace {

// Probit log likelihood for a model eta = a + b x, used by the independent
// grid-search fitter below.
double loglik_ab(double a, double b, const Eigen::VectorXd& x, const Eigen::VectorXi& t) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mu =
        std::min(1.0 - 1e-12, std::max(1e-12, std_normal_cdf(a + b * x(i))));
    ll += t(i) == 1 ? std::log(mu) : std::log(1.0 - mu);
  }
  return ll;
}

// Coarse-to-fine 2-D grid search MLE; no shared code with fit_probit.
std::pair<double, double> grid_search_probit(const Eigen::VectorXd& x, const Eigen::VectorXi& t) {
  double a = 0.0, b = 0.0, span = 3.0;
  for (int level = 0; level < 12; ++level) {
    double best = -1e300, best_a = a, best_b = b;
    const int k = 20;
    for (int i = -k; i <= k; ++i) {
      for (int j = -k; j <= k; ++j) {
        const double ca = a + span * i / k;
        const double cb = b + span * j / k;
        const double ll = loglik_ab(ca, cb, x, t);
        if (ll > best) {
          best = ll;
          best_a = ca;
          best_b = cb;
        }
      }
    }
    a = best_a;
    b = best_b;
    span /= 8.0;
  }
  return {a, b};
}

}  // namespace

TEST_CASE("probit with no predictors recovers the sample proportion") {
  const int n = 500;
  Eigen::MatrixXd X(n, 0);
  Eigen::VectorXi t(n);
  for (int i = 0; i < n; ++i) t(i) = i < n * 2 / 5 ? 1 : 0;  // exactly 40% treated
  const FittedPropensityModel m = fit_probit(X, t);
  CHECK(m.converged);
  REQUIRE(m.coef.size() == 1);
  // MLE of Phi(a) is the sample mean, so a = Phi^{-1}(0.4).
  CHECK(m.coef(0) == doctest::Approx(std_normal_quantile(0.4)).epsilon(1e-7));
}

TEST_CASE("probit agrees with an independent grid-search MLE") {
  const RandomStream s(2024);
  const int n = 200;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXi t(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = s.normal(2 * i);
    t(i) = s.bernoulli(std_normal_cdf(0.5 * X(i, 0)), 2 * i + 1) ? 1 : 0;
  }
  const FittedPropensityModel m = fit_probit(X, t);
  CHECK(m.converged);
  const auto [a, b] = grid_search_probit(X.col(0), t);
  CHECK(std::abs(m.coef(0) - a) < 2e-3);
  CHECK(std::abs(m.coef(1) - b) < 2e-3);
  // And the scoring fit should not have a lower likelihood than the grid point.
  CHECK(m.loglik >= loglik_ab(a, b, X.col(0), t) - 1e-6);
}

TEST_CASE("probit detects complete separation") {
  const int n = 60;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXi t(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = (i - n / 2) + 0.5;
    t(i) = X(i, 0) > 0 ? 1 : 0;  // perfectly separated
  }
  CHECK_THROWS_AS(fit_probit(X, t), SeparationError);
}

TEST_CASE("probit rejects degenerate inputs") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(10, 1);
  Eigen::VectorXi t = Eigen::VectorXi::Ones(10);
  CHECK_THROWS(fit_probit(X, t));  // single class
  for (int i = 0; i < 5; ++i) t(i) = 0;
  CHECK_THROWS_AS(fit_probit(X, t), SingularDesignError);  // constant column = intercept copy
}

TEST_CASE("propensity predictions are probabilities") {
  FittedPropensityModel m;
  SUBCASE("zero coefficients give one half") {
    m.coef = Eigen::VectorXd::Zero(2);
    Eigen::RowVectorXd x(1);
    x << 3.7;
    CHECK(m.predict_one(x) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("known intercept") {
    m.coef.resize(2);
    m.coef << std_normal_quantile(0.4), 0.35;
    Eigen::RowVectorXd x(1);
    x << 0.0;
    CHECK(m.predict_one(x) == doctest::Approx(0.4).epsilon(1e-10));
  }
  SUBCASE("extreme linear predictor is clipped") {
    m.coef.resize(2);
    m.coef << 0.0, 10.0;
    Eigen::RowVectorXd x(1);
    x << 4.0;  // eta = 40
    CHECK(m.predict_one(x) == kPropensityClipHi);
    x << -4.0;
    CHECK(m.predict_one(x) == kPropensityClipLo);
  }
  SUBCASE("monotone in the linear predictor") {
    m.coef.resize(2);
    m.coef << 0.3, 1.2;
    Eigen::RowVectorXd lo(1), hi(1);
    lo << -0.7;
    hi << -0.2;
    CHECK(m.predict_one(lo) < m.predict_one(hi));
  }
}

TEST_CASE("interaction design layout") {
  Eigen::MatrixXd X(2, 2);
  X << 3, 1, 3, 0;
  Eigen::VectorXd t(2);
  t << 1, 0;
  const Eigen::MatrixXd D = build_interaction_design(X, t);
  REQUIRE(D.rows() == 2);
  REQUIRE(D.cols() == 6);
  // Row with t = 1: (1, x1, x2, t, t*x1, t*x2).
  CHECK(D(0, 0) == 1.0);
  CHECK(D(0, 1) == 3.0);
  CHECK(D(0, 2) == 1.0);
  CHECK(D(0, 3) == 1.0);
  CHECK(D(0, 4) == 3.0);
  CHECK(D(0, 5) == 1.0);
  // Row with t = 0 zeroes the interaction block.
  CHECK(D(1, 3) == 0.0);
  CHECK(D(1, 4) == 0.0);
  CHECK(D(1, 5) == 0.0);
}

TEST_CASE("design widths match built matrices") {
  const RandomStream s(5);
  const int n = 40, d = 3;
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = s.normal(i * 4 + j);
    t(i) = s.bernoulli(0.5, i * 4 + 3) ? 1.0 : 0.0;
  }
  for (DesignSpec spec : {DesignSpec(DesignSpec::Kind::interaction),
                          DesignSpec(DesignSpec::Kind::interaction_poly3),
                          DesignSpec(DesignSpec::Kind::correct, 2),
                          DesignSpec(DesignSpec::Kind::correct, 3)}) {
    CHECK(spec.build(X, t).cols() == spec.width(d));
  }
  DesignSpec partial(DesignSpec::Kind::interaction_poly3);
  partial.poly_columns = {1};
  CHECK(partial.build(X, t).cols() == partial.width(d));
  CHECK(partial.width(d) == 2 * (d + 2) + 2);
}

TEST_CASE("ols solves small systems exactly") {
  SUBCASE("intercept only is the mean") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const FittedOutcomeModel m = fit_ols(D, y);
    CHECK(m.coef(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m.sigma == doctest::Approx(1.0).epsilon(1e-12));  // sqrt(2/2)
  }
  SUBCASE("interpolation floors sigma") {
    Eigen::MatrixXd D(2, 2);
    D << 1, 0, 1, 1;
    Eigen::VectorXd y(2);
    y << 4, 9;
    const FittedOutcomeModel m = fit_ols(D, y);
    CHECK(m.coef(0) == doctest::Approx(4.0));
    CHECK(m.coef(1) == doctest::Approx(5.0));
    CHECK(m.sigma == kSigmaFloor);
  }
  SUBCASE("rank deficiency is an error") {
    Eigen::MatrixXd D(4, 2);
    D << 1, 2, 1, 2, 1, 2, 1, 2;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(fit_ols(D, y), SingularDesignError);
  }
}

TEST_CASE("ols matches a normal-equations oracle") {
  const RandomStream s(77);
  const int n = 50, p = 4;
  Eigen::MatrixXd D(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    D(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) D(i, j) = s.normal(i * 5 + j);
    y(i) = 2.0 + D(i, 1) - 0.5 * D(i, 2) + 0.3 * s.normal(i * 5 + 4);
  }
  const FittedOutcomeModel m = fit_ols(D, y);
  // Independent solve through the normal equations and Cholesky.
  const Eigen::MatrixXd G = D.transpose() * D;
  const Eigen::VectorXd oracle = G.llt().solve(D.transpose() * y);
  CHECK((m.coef - oracle).cwiseAbs().maxCoeff() < 1e-8);
  // Residuals orthogonal to the column space.
  const Eigen::VectorXd resid = y - D * m.coef;
  CHECK((D.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8 * y.norm());
}

TEST_CASE("fit_outcome skips power terms for binary covariates") {
  const RandomStream s(31);
  const int n = 120;
  ObservationTable table;
  table.X.resize(n, 2);
  table.y.resize(n);
  table.t.resize(n);
  table.r = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < n; ++i) {
    table.X(i, 0) = s.bernoulli(0.5, 3 * i) ? 1.0 : 0.0;  // binary: x^2 = x
    table.X(i, 1) = s.normal(3 * i + 1);
    table.t(i) = s.bernoulli(0.5, 3 * i + 2) ? 1 : 0;
    table.y(i) = table.X(i, 0) + table.X(i, 1) + table.t(i);
  }
  const FittedOutcomeModel m = fit_outcome(table, DesignSpec(DesignSpec::Kind::interaction_poly3));
  REQUIRE(m.design_spec.poly_columns.size() == 1);
  CHECK(m.design_spec.poly_columns[0] == 1);
  // Predictions round-trip through the resolved basis without throwing.
  const Eigen::RowVectorXd row0 = table.X.row(0);
  CHECK(std::isfinite(m.predict_mean(row0, 1.0)));
}

TEST_CASE("correct-specification basis recovers the generating surface") {
  const RandomStream s(404);
  const int n = 400;
  ObservationTable table;
  table.X.resize(n, 2);
  table.y.resize(n);
  table.t.resize(n);
  table.r = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < n; ++i) {
    table.X(i, 0) = s.normal(4 * i);
    table.X(i, 1) = s.normal(4 * i + 1);
    table.t(i) = s.bernoulli(0.4, 4 * i + 2) ? 1 : 0;
    const double x2sq = table.X(i, 1) * table.X(i, 1);
    const double mean = table.t(i) == 1 ? 2.0 + table.X(i, 0) + 4.0 * x2sq
                                        : 1.0 + table.X(i, 0) + x2sq;
    table.y(i) = mean + 0.5 * s.normal(4 * i + 3);
  }
  const FittedOutcomeModel m = fit_outcome(table, DesignSpec(DesignSpec::Kind::correct, 2));
  REQUIRE(m.coef.size() == 5);
  CHECK(m.coef(0) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(m.coef(1) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(m.coef(2) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(m.coef(3) == doctest::Approx(1.0).epsilon(0.35));
  CHECK(m.coef(4) == doctest::Approx(3.0).epsilon(0.15));
  CHECK(m.sigma == doctest::Approx(0.5).epsilon(0.15));
  CHECK(m.fitted_on == n);
}
