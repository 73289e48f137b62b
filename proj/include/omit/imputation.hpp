#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "omit/data.hpp"
#include "omit/regression.hpp"

namespace omit {

enum class Strategy { Omit, NaiveMI, NaivePlusY };

std::string to_string(Strategy s);

/// Per-unit imputation probabilities plus everything needed to draw the M
/// completed datasets deterministically.
struct ImputationPlan {
  Strategy strategy = Strategy::Omit;
  const ObservationTable* base = nullptr;
  Eigen::VectorXd q_hat;  // P(t* = 1); equals t for observed units
  int M = 0;
  std::uint64_t seed = 0;
  int density_underflows = 0;  // units imputed from e_hat alone
  std::string provenance;

  int n_imputable() const { return base ? base->n_missing() : 0; }
};

/// q = e f1 / (e f1 + (1-e) f0), clipped. Falls back to e when both
/// densities underflow to zero.
double sharpened_probability(double e_hat, double f1, double f0);

/// e_hat holds one propensity per row of `table`, already clipped or
/// strictly inside (0,1).
ImputationPlan plan_omit(const ObservationTable& table, const Eigen::VectorXd& e_hat,
                         const FittedOutcomeModel& y_model, int M, std::uint64_t seed);

ImputationPlan plan_naive(const ObservationTable& table, const Eigen::VectorXd& e_hat, int M,
                          std::uint64_t seed);

/// Single probit of t on (x, standardized y) fit to the complete cases;
/// standardization parameters come from the complete cases only.
ImputationPlan plan_naive_plus_y(const ObservationTable& table, int M, std::uint64_t seed);

/// Draws the M completed datasets. The draw for (unit i, imputation m) is a
/// pure function of (seed, i, m), so results are independent of iteration
/// order.
std::vector<CompletedDataset> materialize(const ImputationPlan& plan);

}  // namespace omit
