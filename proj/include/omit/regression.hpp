#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "omit/data.hpp"

namespace omit {

inline constexpr double kPropensityClipLo = 1e-6;
inline constexpr double kPropensityClipHi = 1.0 - 1e-6;
inline constexpr double kSigmaFloor = 1e-8;

inline double clip_probability(double p) {
  return std::min(kPropensityClipHi, std::max(kPropensityClipLo, p));
}

struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SeparationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Probit regression fit by Fisher scoring. coef = (intercept, slopes).
struct FittedPropensityModel {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;

  /// Phi(intercept + x'beta), clipped away from {0,1}. X holds predictor
  /// rows without an intercept column.
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  double predict_one(const Eigen::RowVectorXd& x) const;
};

/// Fits t ~ 1 + X by maximum likelihood. X excludes the intercept column.
/// Requires both classes present and a full-rank design.
FittedPropensityModel fit_probit(const Eigen::MatrixXd& X, const Eigen::VectorXi& t);

/// Columns [1, x_1..x_d, t, t*x_1..t*x_d].
Eigen::MatrixXd build_interaction_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& t);

/// Outcome-model basis over (x, t).
struct DesignSpec {
  enum class Kind {
    interaction,        // main effects + t-interactions
    interaction_poly3,  // adds x_j^2, x_j^3 and their t-interactions
    correct,            // (1, x_1, x_2^power, t, t*x_2^power)
  };

  DesignSpec() = default;
  explicit DesignSpec(Kind k, int pw = 2) : kind(k), power(pw) {}

  Kind kind = Kind::interaction;
  int power = 2;  // exponent of x_2 for Kind::correct

  // Columns given square/cube terms under interaction_poly3; empty means
  // every column. fit_outcome restricts this to columns with at least
  // three distinct values so binary indicators do not duplicate themselves.
  std::vector<int> poly_columns;

  Eigen::MatrixXd build(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) const;
  int width(int d) const;
  std::string describe() const;
};

/// Gaussian linear outcome model: coefficients over a DesignSpec basis plus
/// a residual standard error.
struct FittedOutcomeModel {
  Eigen::VectorXd coef;
  double sigma = 0.0;
  DesignSpec design_spec;
  int fitted_on = 0;

  /// E[y | x, t] under the fitted model.
  double predict_mean(const Eigen::RowVectorXd& x, double t) const;
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& X, double t) const;
};

/// Least squares through a rank-revealing QR; sigma = sqrt(RSS / (n - p)),
/// floored at kSigmaFloor.
FittedOutcomeModel fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           const DesignSpec& spec = {});

/// Builds the spec's design on the complete cases of `table` and fits it.
FittedOutcomeModel fit_outcome(const ObservationTable& complete_cases, const DesignSpec& spec);

}  // namespace omit
