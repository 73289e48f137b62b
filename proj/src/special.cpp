#include "omit/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace omit {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490393;

// Peter Acklam's rational approximation, good to ~1.15e-9 relative.
double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}
}  // namespace

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("std_normal_quantile: p must lie in (0,1)");
  }
  double z = normal_quantile_approx(p);
  // Newton polish; cdf and pdf are both cheap and exact enough that two
  // steps reach machine precision from the Acklam starting point.
  for (int it = 0; it < 3; ++it) {
    double err = std_normal_cdf(z) - p;
    double deriv = std_normal_pdf(z);
    if (deriv <= 0.0) break;
    double step = err / deriv;
    if (std::abs(step) > 1.0) step = step > 0 ? 1.0 : -1.0;
    z -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
  }
  return z;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("student_t_quantile: p must lie in (0,1)");
  }
  if (!(nu > 0.0)) {
    throw std::invalid_argument("student_t_quantile: nu must be positive");
  }
  if (std::isinf(nu) || nu > 1e7) {
    // Cornish-Fisher normal-limit expansion; error O(nu^-2).
    double z = std_normal_quantile(p);
    return z + (z * z * z + z) / (4.0 * nu);
  }
  boost::math::students_t_distribution<double> dist(nu);
  return boost::math::quantile(dist, p);
}

double gaussian_density(double y, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_density: sigma must be positive");
  }
  double z = (y - mu) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

}  // namespace omit
