#include "omit/imputation.hpp"

#include <cmath>
#include <stdexcept>

#include "omit/rng.hpp"
#include "omit/special.hpp"

namespace omit {

namespace {

// Substream id for imputation draws within a plan's seed.
constexpr std::uint64_t kDrawStream = 0x11;

void record_observed(const ObservationTable& table, Eigen::VectorXd& q) {
  for (int i = 0; i < table.n(); ++i) {
    if (table.r(i) == 0) q(i) = static_cast<double>(table.t(i));
  }
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Omit: return "OMIT";
    case Strategy::NaiveMI: return "NaiveMI";
    case Strategy::NaivePlusY: return "NaivePlusY";
  }
  return "?";
}

double sharpened_probability(double e_hat, double f1, double f0) {
  if (!(e_hat > 0.0 && e_hat < 1.0)) {
    throw std::invalid_argument("sharpened_probability: e_hat outside (0,1)");
  }
  if (f1 < 0.0 || f0 < 0.0) {
    throw std::invalid_argument("sharpened_probability: negative density");
  }
  const double q1 = e_hat * f1;
  const double q0 = (1.0 - e_hat) * f0;
  const double total = q1 + q0;
  if (total <= 0.0) return clip_probability(e_hat);  // outcome carries no information here
  return clip_probability(q1 / total);
}

ImputationPlan plan_omit(const ObservationTable& table, const Eigen::VectorXd& e_hat,
                         const FittedOutcomeModel& y_model, int M, std::uint64_t seed) {
  table.validate();
  if (e_hat.size() != table.n()) {
    throw std::invalid_argument("plan_omit: e_hat length does not match table");
  }
  ImputationPlan plan;
  plan.strategy = Strategy::Omit;
  plan.base = &table;
  plan.M = M;
  plan.seed = seed;
  plan.provenance = "omit: probit propensity + gaussian outcome (" +
                    y_model.design_spec.describe() + ")";
  plan.q_hat.resize(table.n());

  const Eigen::VectorXd mu1 = y_model.predict_mean(table.X, 1.0);
  const Eigen::VectorXd mu0 = y_model.predict_mean(table.X, 0.0);
  for (int i = 0; i < table.n(); ++i) {
    if (table.r(i) == 0) continue;
    const double f1 = gaussian_density(table.y(i), mu1(i), y_model.sigma);
    const double f0 = gaussian_density(table.y(i), mu0(i), y_model.sigma);
    if (f1 + f0 <= 0.0) ++plan.density_underflows;
    plan.q_hat(i) = sharpened_probability(e_hat(i), f1, f0);
  }
  record_observed(table, plan.q_hat);
  return plan;
}

ImputationPlan plan_naive(const ObservationTable& table, const Eigen::VectorXd& e_hat, int M,
                          std::uint64_t seed) {
  table.validate();
  if (e_hat.size() != table.n()) {
    throw std::invalid_argument("plan_naive: e_hat length does not match table");
  }
  ImputationPlan plan;
  plan.strategy = Strategy::NaiveMI;
  plan.base = &table;
  plan.M = M;
  plan.seed = seed;
  plan.provenance = "naive: probit propensity only";
  plan.q_hat = e_hat.unaryExpr([](double p) { return clip_probability(p); });
  record_observed(table, plan.q_hat);
  return plan;
}

ImputationPlan plan_naive_plus_y(const ObservationTable& table, int M, std::uint64_t seed) {
  table.validate();
  const ObservationTable cc = table.complete_case_view();

  // Standardize y with complete-case moments, applied to every unit.
  Eigen::VectorXd ycc = cc.y;
  const ColumnTransform tr = standardize(ycc, "y");
  Eigen::VectorXd ytilde = (table.y.array() - tr.mean) / tr.sd;

  Eigen::MatrixXd Dcc(cc.n(), cc.d() + 1);
  Dcc.leftCols(cc.d()) = cc.X;
  Eigen::VectorXd ycc_std = (cc.y.array() - tr.mean) / tr.sd;
  Dcc.col(cc.d()) = ycc_std;
  const FittedPropensityModel model = fit_probit(Dcc, cc.t);

  Eigen::MatrixXd Dall(table.n(), table.d() + 1);
  Dall.leftCols(table.d()) = table.X;
  Dall.col(table.d()) = ytilde;

  ImputationPlan plan;
  plan.strategy = Strategy::NaivePlusY;
  plan.base = &table;
  plan.M = M;
  plan.seed = seed;
  plan.provenance = "naive+y: probit of t on (x, standardized y)";
  plan.q_hat = model.predict(Dall);
  record_observed(table, plan.q_hat);
  return plan;
}

std::vector<CompletedDataset> materialize(const ImputationPlan& plan) {
  if (!plan.base) throw std::invalid_argument("materialize: plan has no base table");
  if (plan.M < 1) throw std::invalid_argument("materialize: M must be positive");
  const ObservationTable& table = *plan.base;
  const RandomStream draws = RandomStream(plan.seed).sub(kDrawStream);

  std::vector<CompletedDataset> out(plan.M);
  for (int m = 0; m < plan.M; ++m) {
    CompletedDataset ds;
    ds.base = &table;
    ds.imputation_index = m + 1;
    ds.t_star = table.t;
    for (int i = 0; i < table.n(); ++i) {
      if (table.r(i) == 1) {
        const RandomStream unit = draws.sub(static_cast<std::uint64_t>(i));
        ds.t_star(i) = unit.bernoulli(plan.q_hat(i), static_cast<std::uint64_t>(m)) ? 1 : 0;
      }
    }
    out[m] = std::move(ds);
  }
  return out;
}

}  // namespace omit
