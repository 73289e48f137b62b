#include "omit/regression.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

#include "omit/special.hpp"

namespace omit {

namespace {

constexpr double kProbitStepTol = 1e-10;
constexpr int kProbitMaxIter = 100;
constexpr double kSeparationEta = 15.0;

double probit_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXi& t) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double mu = std::min(1.0 - 1e-15, std::max(1e-15, std_normal_cdf(eta(i))));
    ll += t(i) == 1 ? std::log(mu) : std::log(1.0 - mu);
  }
  return ll;
}

void check_separation(const Eigen::VectorXd& eta, const Eigen::VectorXi& t) {
  bool treated_sep = true, control_sep = true;
  bool any_treated = false, any_control = false;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (t(i) == 1) {
      any_treated = true;
      if (std::abs(eta(i)) <= kSeparationEta) treated_sep = false;
    } else {
      any_control = true;
      if (std::abs(eta(i)) <= kSeparationEta) control_sep = false;
    }
  }
  if ((any_treated && treated_sep) || (any_control && control_sep)) {
    throw SeparationError(
        "complete separation: |linear predictor| exceeds 15 for every unit of one class");
  }
}

}  // namespace

Eigen::VectorXd FittedPropensityModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() + 1 != coef.size()) {
    throw std::invalid_argument("predict: covariate count does not match model");
  }
  if (!X.allFinite()) throw std::invalid_argument("predict: non-finite covariate");
  Eigen::VectorXd eta =
      Eigen::VectorXd::Constant(X.rows(), coef(0)) + X * coef.tail(coef.size() - 1);
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p(i) = clip_probability(std_normal_cdf(eta(i)));
  return p;
}

double FittedPropensityModel::predict_one(const Eigen::RowVectorXd& x) const {
  Eigen::MatrixXd X(1, x.size());
  X.row(0) = x;
  return predict(X)(0);
}

FittedPropensityModel fit_probit(const Eigen::MatrixXd& X, const Eigen::VectorXi& t) {
  const Eigen::Index n = t.size();
  if (X.rows() != n) throw std::invalid_argument("fit_probit: row mismatch");
  const int treated = static_cast<int>((t.array() == 1).count());
  if (treated == 0 || treated == n) {
    throw std::invalid_argument("fit_probit: need at least one treated and one control unit");
  }

  Eigen::MatrixXd D(n, X.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(X.cols()) = X;
  const Eigen::Index p = D.cols();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw SingularDesignError("fit_probit: design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
  }

  FittedPropensityModel model;
  model.coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = probit_loglik(eta, t);

  for (int it = 1; it <= kProbitMaxIter; ++it) {
    Eigen::VectorXd w(n), sc(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::min(1.0 - 1e-12, std::max(1e-12, std_normal_cdf(eta(i))));
      const double phi = std_normal_pdf(eta(i));
      const double v = mu * (1.0 - mu);
      w(i) = phi * phi / v;
      sc(i) = phi * (t(i) - mu) / v;
    }
    Eigen::VectorXd score = D.transpose() * sc;
    Eigen::MatrixXd info = D.transpose() * w.asDiagonal() * D;
    Eigen::VectorXd step = info.ldlt().solve(score);

    // Step halving keeps the likelihood non-decreasing.
    double new_ll = ll;
    Eigen::VectorXd cand;
    for (int half = 0; half < 30; ++half) {
      cand = model.coef + step;
      Eigen::VectorXd cand_eta =
          Eigen::VectorXd::Constant(n, cand(0)) + X * cand.tail(p - 1);
      new_ll = probit_loglik(cand_eta, t);
      if (new_ll >= ll - 1e-12) {
        eta = std::move(cand_eta);
        break;
      }
      step *= 0.5;
    }
    model.coef = cand;
    model.iterations = it;
    const bool climbing = new_ll > ll + 1e-12;
    ll = new_ll;
    check_separation(eta, t);

    if (step.norm() < kProbitStepTol) {
      model.converged = true;
      break;
    }
    if (!climbing && step.norm() < 1e-6) {
      model.converged = true;
      break;
    }
  }
  model.loglik = ll;
  return model;
}

Eigen::MatrixXd build_interaction_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) {
  if (X.rows() != t.size()) throw std::invalid_argument("build_interaction_design: row mismatch");
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd D(n, 2 * d + 2);
  D.col(0).setOnes();
  D.middleCols(1, d) = X;
  D.col(d + 1) = t;
  D.rightCols(d) = X.array().colwise() * t.array();
  return D;
}

Eigen::MatrixXd DesignSpec::build(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) const {
  const Eigen::Index n = X.rows(), d = X.cols();
  switch (kind) {
    case Kind::interaction:
      return build_interaction_design(X, t);
    case Kind::interaction_poly3: {
      std::vector<int> cols = poly_columns;
      if (cols.empty()) {
        cols.resize(d);
        for (Eigen::Index j = 0; j < d; ++j) cols[j] = static_cast<int>(j);
      }
      Eigen::MatrixXd B(n, d + 2 * static_cast<Eigen::Index>(cols.size()));
      B.leftCols(d) = X;
      Eigen::Index k = d;
      for (int j : cols) {
        B.col(k++) = X.col(j).array().square();
        B.col(k++) = X.col(j).array().cube();
      }
      return build_interaction_design(B, t);
    }
    case Kind::correct: {
      if (d < 2) throw std::invalid_argument("DesignSpec::correct needs at least two covariates");
      Eigen::MatrixXd D(n, 5);
      D.col(0).setOnes();
      D.col(1) = X.col(0);
      D.col(2) = X.col(1).array().pow(power);
      D.col(3) = t;
      D.col(4) = D.col(2).array() * t.array();
      return D;
    }
  }
  throw std::logic_error("DesignSpec: unknown kind");
}

int DesignSpec::width(int d) const {
  switch (kind) {
    case Kind::interaction: return 2 * d + 2;
    case Kind::interaction_poly3: {
      const int k = poly_columns.empty() ? d : static_cast<int>(poly_columns.size());
      return 2 * (d + 2 * k) + 2;
    }
    case Kind::correct: return 5;
  }
  return 0;
}

std::string DesignSpec::describe() const {
  switch (kind) {
    case Kind::interaction: return "main effects + treatment interactions";
    case Kind::interaction_poly3: return "cubic polynomial basis + treatment interactions";
    case Kind::correct: return "intercept, x1, x2^" + std::to_string(power) + ", t, t*x2^" +
                               std::to_string(power);
  }
  return "";
}

double FittedOutcomeModel::predict_mean(const Eigen::RowVectorXd& x, double t) const {
  Eigen::MatrixXd X(1, x.size());
  X.row(0) = x;
  return predict_mean(X, t)(0);
}

Eigen::VectorXd FittedOutcomeModel::predict_mean(const Eigen::MatrixXd& X, double t) const {
  Eigen::VectorXd tv = Eigen::VectorXd::Constant(X.rows(), t);
  return design_spec.build(X, tv) * coef;
}

FittedOutcomeModel fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           const DesignSpec& spec) {
  const Eigen::Index n = design.rows(), p = design.cols();
  if (y.size() != n) throw std::invalid_argument("fit_ols: row mismatch");
  if (n < p) throw std::invalid_argument("fit_ols: fewer rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!cols.empty()) cols += ", ";
      cols += std::to_string(perm(k));
    }
    throw SingularDesignError("fit_ols: rank-deficient design; dependent columns {" + cols + "}");
  }

  FittedOutcomeModel model;
  model.coef = qr.solve(y);
  const double rss = (y - design * model.coef).squaredNorm();
  model.sigma = n > p ? std::sqrt(rss / static_cast<double>(n - p)) : 0.0;
  model.sigma = std::max(model.sigma, kSigmaFloor);
  model.design_spec = spec;
  model.fitted_on = static_cast<int>(n);
  return model;
}

FittedOutcomeModel fit_outcome(const ObservationTable& complete_cases, const DesignSpec& spec) {
  if (complete_cases.n_missing() != 0) {
    throw std::invalid_argument("fit_outcome: expected a complete-case table");
  }
  DesignSpec resolved = spec;
  if (spec.kind == DesignSpec::Kind::interaction_poly3 && spec.poly_columns.empty()) {
    // Power terms only for columns with >= 3 distinct values; squares and
    // cubes of 0/1 indicators would duplicate the linear column.
    for (int j = 0; j < complete_cases.d(); ++j) {
      const double first = complete_cases.X(0, j);
      double second = first;
      bool three = false;
      for (int i = 1; i < complete_cases.n(); ++i) {
        const double v = complete_cases.X(i, j);
        if (v == first) continue;
        if (second == first) {
          second = v;
        } else if (v != second) {
          three = true;
          break;
        }
      }
      if (three) resolved.poly_columns.push_back(j);
    }
  }
  Eigen::VectorXd t = complete_cases.t.cast<double>();
  return fit_ols(resolved.build(complete_cases.X, t), complete_cases.y, resolved);
}

}  // namespace omit
