#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "omit/simulation.hpp"

#include <nlohmann/json_fwd.hpp>

namespace omit {

/// Finite population with known generative ingredients: true propensities,
/// true missingness probabilities (evaluated at each potential outcome),
/// and the true outcome densities at both potential outcomes.
struct OracleScenario {
  Eigen::MatrixXd X;
  Eigen::VectorXd y1, y0;
  Eigen::VectorXd e;          // true propensity per unit
  Eigen::VectorXd p_treated;  // p(r=1 | x, y = y1)
  Eigen::VectorXd p_control;  // p(r=1 | x, y = y0)
  Eigen::VectorXd d11, d10, d01, d00;  // f(y1|x,1), f(y1|x,0), f(y0|x,1), f(y0|x,0)

  int n() const { return static_cast<int>(y1.size()); }
  double tau_fp() const { return (y1 - y0).mean(); }
};

/// Probabilities the imputation assigns t* = j given true treatment k.
struct ImputationProbQuad {
  double m11 = 0.0, m01 = 0.0, m10 = 0.0, m00 = 0.0;
};

enum class OracleStrategy { OmitTrue, Naive };

/// Builds the per-unit scenario from a simulation config. Missingness is
/// evaluated as a deterministic function of (x_2, y) with the outcome
/// standardized by the population's propensity-weighted mixture moments.
OracleScenario make_oracle_scenario(const ScenarioConfig& config, std::uint64_t stream_key);

std::vector<ImputationProbQuad> oracle_imputation_probs(const OracleScenario& scenario,
                                                        OracleStrategy strategy);

/// Finite-population bias of the per-imputation IPW estimator, with the
/// missingness probability for each term evaluated at the potential
/// outcome that term conditions on.
double bias_B(const Eigen::VectorXd& y1, const Eigen::VectorXd& y0,
              const Eigen::VectorXd& p_treated, const Eigen::VectorXd& p_control,
              const Eigen::VectorXd& e, const std::vector<ImputationProbQuad>& quads);

/// Single-p convenience overload.
double bias_B(const Eigen::VectorXd& y1, const Eigen::VectorXd& y0, const Eigen::VectorXd& p,
              const Eigen::VectorXd& e, const std::vector<ImputationProbQuad>& quads);

double bias_B(const OracleScenario& scenario, const std::vector<ImputationProbQuad>& quads);

struct CheckReport {
  std::string check;
  int replicates = 0;
  double mean = 0.0;
  double mc_se = 0.0;
  double standardized = 0.0;
  bool pass = false;
  double redraw_rate = 0.0;  // proposition-1 empty-arm redraws
};

nlohmann::json to_json(const CheckReport& report);

/// Monte Carlo over fresh populations: mean of B under the requested
/// strategy. OmitTrue passes when |mean| <= 4 se; Naive passes when the
/// standardized mean is below -4 (significantly negative).
CheckReport verify_theorem1(const ScenarioConfig& config, int replicates, std::uint64_t seed,
                            OracleStrategy strategy = OracleStrategy::OmitTrue);

/// The condition picks the missingness mechanism and the expected verdict;
/// effect heterogeneity comes from the config's beta_y (1 = homogeneous).
enum class Prop1Condition {
  HomogeneousMar,    // MAR missingness, homogeneous effects: should pass
  HeterogeneousMcar, // MCAR missingness: should pass regardless of heterogeneity
  HeterogeneousMar,  // MAR + heterogeneous effects: negative control, bound must fail
};

/// Fixed population, repeated (t, r) draws; complete-case IPW with true
/// propensities. pass reflects |mean - tau_fp| <= 4 se, except for the
/// negative control where pass means the bound is exceeded.
CheckReport verify_proposition1(const ScenarioConfig& base_config, Prop1Condition condition,
                                int replicates, std::uint64_t seed);

}  // namespace omit
