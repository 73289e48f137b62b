#pragma once

#include <Eigen/Core>
#include <limits>
#include <vector>

#include "omit/data.hpp"

#include <nlohmann/json_fwd.hpp>

namespace omit {

/// IPW point estimate with a with-replacement linearization variance.
struct IPWEstimate {
  double tau_hat = 0.0;
  double u = 0.0;  // estimated variance of tau_hat
  int n_used = 0;
  double w_min = 0.0, w_max = 0.0, w_mean = 0.0;
  bool clipped_weights = false;  // some e_hat sat at a clip bound
};

/// Difference of inverse-probability-weighted outcome sums divided by
/// denominator_n. t_star must be fully observed 0/1.
IPWEstimate ipw_estimate(const Eigen::VectorXd& y, const Eigen::VectorXi& t_star,
                         const Eigen::VectorXd& e_hat, int denominator_n);

/// Complete-case estimator: rows with r = 0, denominator n_obs.
IPWEstimate ipw_complete_case(const ObservationTable& table, const Eigen::VectorXd& e_hat);

/// Rubin's rules combination of M per-imputation estimates.
struct PooledEstimate {
  double tau_bar = 0.0;
  double u_bar = 0.0;
  double b = 0.0;
  double T_M = 0.0;
  double nu = std::numeric_limits<double>::infinity();
  double ci_low = 0.0, ci_high = 0.0;
  double level = 0.95;
  int M = 0;
};

PooledEstimate pool(const std::vector<IPWEstimate>& estimates, double level = 0.95);

nlohmann::json to_json(const IPWEstimate& e);
nlohmann::json to_json(const PooledEstimate& e);

}  // namespace omit
