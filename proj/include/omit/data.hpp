#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace omit {

/// Causal dataset with possibly missing treatments. Covariates and
/// outcomes are always fully observed; t(i) == kMissing exactly when
/// r(i) == 1. Immutable by convention after construction.
struct ObservationTable {
  static constexpr int kMissing = -1;

  Eigen::MatrixXd X;   // n x d covariates
  Eigen::VectorXd y;   // realized outcomes
  Eigen::VectorXi t;   // 0/1, kMissing when unobserved
  Eigen::VectorXi r;   // 1 when t is missing

  std::vector<std::string> covariate_names;
  std::string outcome_name = "y";
  std::string treatment_name = "t";

  int n() const { return static_cast<int>(y.size()); }
  int d() const { return static_cast<int>(X.cols()); }
  int n_obs() const { return static_cast<int>((r.array() == 0).count()); }
  int n_missing() const { return n() - n_obs(); }

  /// Rows with observed treatment, in original order.
  ObservationTable complete_case_view() const;

  /// Throws if the t/r correspondence or shapes are inconsistent.
  void validate() const;
};

/// One multiply-imputed completion of a table.
struct CompletedDataset {
  const ObservationTable* base = nullptr;
  Eigen::VectorXi t_star;  // no missing entries
  int imputation_index = 0;
};

/// Simulation-only oracle: both potential outcomes per unit.
struct PotentialOutcomeTable {
  Eigen::VectorXd y1;
  Eigen::VectorXd y0;
  double tau_fp = 0.0;  // mean(y1 - y0) over the population

  static PotentialOutcomeTable from(Eigen::VectorXd y1_in, Eigen::VectorXd y0_in);
};

struct CsvSchema {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> covariates;
};

/// Parse error carrying the offending location.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ObservationTable load_csv(const std::string& path, const CsvSchema& schema);

/// Writes covariates, treatment (empty cell when missing) and outcome with
/// round-trippable decimal formatting.
void write_csv(const std::string& path, const ObservationTable& table);

/// Writes a completed dataset: base columns plus t_star and imputed flag.
void write_completed_csv(const std::string& path, const CompletedDataset& ds);

struct ColumnTransform {
  double mean = 0.0;
  double sd = 1.0;
};

/// In-place standardization of a vector to sample mean 0, sd 1 (n-1
/// denominator). Throws on constant input.
ColumnTransform standardize(Eigen::Ref<Eigen::VectorXd> v, const std::string& name = "");

/// Standardizes the selected covariate columns of a copy of the table.
/// Returns the new table and one transform per selected column.
std::pair<ObservationTable, std::vector<ColumnTransform>> standardize_columns(
    const ObservationTable& table, const std::vector<int>& columns);

inline double destandardize(double v, const ColumnTransform& tr) { return v * tr.sd + tr.mean; }

/// Round-trippable decimal formatting of a double.
std::string format_double(double v);

}  // namespace omit
