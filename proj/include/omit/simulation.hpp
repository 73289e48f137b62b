#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "omit/data.hpp"

#include <nlohmann/json_fwd.hpp>

namespace omit {

enum class Variant { Quadratic, Cubic };

enum class Method { OmitCorrect, OmitLm, OmitFlex, NaiveMI, NaivePlusY, CC };

std::string to_string(Variant v);
std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// One cell of the simulation grid.
struct ScenarioConfig {
  int n = 1000;
  int d = 10;
  double rho = 0.4;
  double beta_y = 4.0;
  double sigma = 1.0;
  double miss_level = 0.3;  // target marginal missingness
  int replicates = 500;
  int M = 20;
  Variant variant = Variant::Quadratic;
  std::vector<Method> methods;
  std::uint64_t seed = 0;
  double level = 0.95;

  // Generative constants; the missingness intercept is derived from
  // miss_level as Phi^{-1}(miss_level).
  double beta_t2 = 0.35;
  double beta_r2 = 0.75;
  double gamma = 0.1;

  std::string id() const;
  void validate() const;
};

struct Population {
  Eigen::MatrixXd X;
  PotentialOutcomeTable po;
};

/// Draws covariates from MVN(0, (1-rho)I + rho 11') and potential outcomes
/// from the variant's response surfaces.
Population generate_population(const ScenarioConfig& config, std::uint64_t stream_key);

struct MaskedDraw {
  ObservationTable table;
  Eigen::VectorXi t_true;  // oracle truth, diagnostics only
};

/// Draws treatments, realizes outcomes, then masks treatments MAR on
/// (x_2, standardized realized y).
MaskedDraw assign_and_mask(const Population& pop, const ScenarioConfig& config,
                           int replicate_index);

struct MethodRep {
  double tau_hat = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  bool covered = false;
  bool ok = false;
};

struct MethodSummary {
  double mean_bias = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  int used = 0;
  int excluded = 0;
  double mean_match_rate = 0.0;  // imputed vs oracle treatments, MI methods only
};

struct ScenarioResult {
  ScenarioConfig config;
  double tau_fp = 0.0;
  std::map<Method, std::vector<MethodRep>> reps;
  std::map<Method, MethodSummary> summaries;
  double realized_missingness = 0.0;
  double realized_treated_fraction = 0.0;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

/// Writes a long-format bias CSV, a coverage table CSV and a diagnostics
/// JSON under out_dir.
void summarize_grid(const std::vector<ScenarioResult>& results, const std::string& out_dir);

nlohmann::json to_json(const ScenarioResult& result);

}  // namespace omit
