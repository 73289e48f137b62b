#include "omit/estimation.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "omit/regression.hpp"
#include "omit/special.hpp"

namespace omit {

IPWEstimate ipw_estimate(const Eigen::VectorXd& y, const Eigen::VectorXi& t_star,
                         const Eigen::VectorXd& e_hat, int denominator_n) {
  const Eigen::Index n = y.size();
  if (t_star.size() != n || e_hat.size() != n) {
    throw std::invalid_argument("ipw_estimate: length mismatch");
  }
  if (n < 2) throw std::invalid_argument("ipw_estimate: need at least two units");
  if (denominator_n < 2) throw std::invalid_argument("ipw_estimate: denominator_n < 2");

  IPWEstimate est;
  est.n_used = static_cast<int>(n);
  Eigen::VectorXd psi(n);
  double wsum = 0.0;
  est.w_min = std::numeric_limits<double>::infinity();
  est.w_max = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = e_hat(i);
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("ipw_estimate: e_hat outside (0,1)");
    if (e <= kPropensityClipLo || e >= kPropensityClipHi) est.clipped_weights = true;
    if (t_star(i) != 0 && t_star(i) != 1) {
      throw std::invalid_argument("ipw_estimate: t_star must be 0/1");
    }
    const double w = t_star(i) == 1 ? 1.0 / e : 1.0 / (1.0 - e);
    est.w_min = std::min(est.w_min, w);
    est.w_max = std::max(est.w_max, w);
    wsum += w;
    psi(i) = t_star(i) == 1 ? y(i) / e : -y(i) / (1.0 - e);
  }
  est.w_mean = wsum / static_cast<double>(n);
  est.tau_hat = psi.sum() / static_cast<double>(denominator_n);
  const double psi_bar = psi.mean();
  est.u = (psi.array() - psi_bar).square().sum() /
          (static_cast<double>(n) * static_cast<double>(n - 1));
  return est;
}

IPWEstimate ipw_complete_case(const ObservationTable& table, const Eigen::VectorXd& e_hat) {
  if (e_hat.size() != table.n()) throw std::invalid_argument("ipw_complete_case: length mismatch");
  const int m = table.n_obs();
  if (m < 2) throw std::invalid_argument("ipw_complete_case: fewer than two complete cases");
  Eigen::VectorXd y(m), e(m);
  Eigen::VectorXi t(m);
  int k = 0, treated = 0;
  for (int i = 0; i < table.n(); ++i) {
    if (table.r(i) == 0) {
      y(k) = table.y(i);
      e(k) = e_hat(i);
      t(k) = table.t(i);
      treated += table.t(i);
      ++k;
    }
  }
  if (treated == 0 || treated == m) {
    throw std::invalid_argument("ipw_complete_case: one arm has no complete cases");
  }
  return ipw_estimate(y, t, e, m);
}

PooledEstimate pool(const std::vector<IPWEstimate>& estimates, double level) {
  const int M = static_cast<int>(estimates.size());
  if (M < 2) throw std::invalid_argument("pool: need M >= 2 estimates");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("pool: level must be in (0,1)");

  PooledEstimate out;
  out.M = M;
  out.level = level;
  for (const auto& e : estimates) {
    out.tau_bar += e.tau_hat;
    out.u_bar += e.u;
  }
  out.tau_bar /= M;
  out.u_bar /= M;
  for (const auto& e : estimates) {
    const double d = e.tau_hat - out.tau_bar;
    out.b += d * d;
  }
  out.b /= (M - 1);

  const double inflate = (1.0 + 1.0 / M) * out.b;
  out.T_M = inflate + out.u_bar;

  double q;
  if (out.b > 0.0) {
    const double ratio = 1.0 + out.u_bar / inflate;
    out.nu = (M - 1) * ratio * ratio;
    q = student_t_quantile(0.5 * (1.0 + level), out.nu);
  } else {
    // All point estimates identical: Rubin's nu is undefined, the limit
    // is the normal reference.
    out.nu = std::numeric_limits<double>::infinity();
    q = std_normal_quantile(0.5 * (1.0 + level));
  }
  const double half = q * std::sqrt(out.T_M);
  out.ci_low = out.tau_bar - half;
  out.ci_high = out.tau_bar + half;
  return out;
}

nlohmann::json to_json(const IPWEstimate& e) {
  return {{"tau_hat", e.tau_hat},
          {"u", e.u},
          {"n_used", e.n_used},
          {"weights_summary", {{"min", e.w_min}, {"max", e.w_max}, {"mean", e.w_mean}}}};
}

nlohmann::json to_json(const PooledEstimate& e) {
  nlohmann::json j = {{"tau_bar", e.tau_bar}, {"u_bar", e.u_bar},     {"b", e.b},
                      {"T_M", e.T_M},         {"ci", {e.ci_low, e.ci_high}},
                      {"level", e.level},     {"M", e.M}};
  if (std::isinf(e.nu)) {
    j["nu"] = nullptr;
  } else {
    j["nu"] = e.nu;
  }
  return j;
}

}  // namespace omit
