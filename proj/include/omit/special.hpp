#pragma once

namespace omit {

/// Standard normal density.
double std_normal_pdf(double z);

/// Standard normal distribution function, computed through the
/// complementary error function.
double std_normal_cdf(double z);

/// Inverse of std_normal_cdf for p in (0,1). Rational initial guess
/// polished by safeguarded Newton steps on the cdf.
double std_normal_quantile(double p);

/// Quantile of Student's t with (possibly non-integer) nu > 0 degrees of
/// freedom. For very large nu a normal-limit expansion is used.
double student_t_quantile(double p, double nu);

/// N(mu, sigma^2) density at y. Requires sigma > 0.
double gaussian_density(double y, double mu, double sigma);

}  // namespace omit
