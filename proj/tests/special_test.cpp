#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "omit/rng.hpp"
#include "omit/special.hpp"

using namespace omit;

TEST_CASE("normal cdf anchor values") {
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(std_normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-6));
  // Symmetry to full precision.
  for (double z : {0.3, 1.7, 4.2}) {
    CHECK(std_normal_cdf(z) + std_normal_cdf(-z) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(std::abs(std_normal_quantile(0.5)) < 1e-14);
  CHECK(std_normal_quantile(0.4) == doctest::Approx(-0.2533471031).epsilon(1e-8));
  for (double z = -6.0; z <= 6.0; z += 0.25) {
    CHECK(std::abs(std_normal_quantile(std_normal_cdf(z)) - z) < 1e-8);
  }
  CHECK_THROWS(std_normal_quantile(0.0));
  CHECK_THROWS(std_normal_quantile(1.0));
}

TEST_CASE("student t quantile") {
  // Cauchy case has a closed form: tan(pi (p - 1/2)).
  CHECK(student_t_quantile(0.975, 1.0) == doctest::Approx(12.706204736).epsilon(1e-8));
  CHECK(student_t_quantile(0.975, 10.0) == doctest::Approx(2.228138852).epsilon(1e-8));
  CHECK(std::abs(student_t_quantile(0.5, 7.3)) < 1e-12);
  // Normal limit.
  CHECK(student_t_quantile(0.975, 1e9) == doctest::Approx(1.959964).epsilon(1e-4));
  // Fractional degrees of freedom are legal (Rubin's nu is real-valued).
  const double q = student_t_quantile(0.975, 16.0 / 9.0);
  CHECK(q > student_t_quantile(0.975, 2.0));
  CHECK_THROWS(student_t_quantile(0.975, 0.0));
}

TEST_CASE("gaussian density values") {
  CHECK(gaussian_density(0.0, 0.0, 1.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(gaussian_density(3.0, 3.0, 2.0) == doctest::Approx(0.3989422804 / 2.0).epsilon(1e-9));
  CHECK(gaussian_density(2.0, 0.0, 2.0) ==
        doctest::Approx(0.3989422804 / 2.0 * std::exp(-0.5)).epsilon(1e-6));
  CHECK_THROWS(gaussian_density(0.0, 0.0, 0.0));
  CHECK_THROWS(gaussian_density(0.0, 0.0, -1.0));
}

TEST_CASE("gaussian density integrates to one") {
  // Simpson over mu +/- 10 sigma.
  const double mu = 1.3, sigma = 2.7;
  const int steps = 2000;  // even
  const double a = mu - 10.0 * sigma, b = mu + 10.0 * sigma;
  const double h = (b - a) / steps;
  double acc = gaussian_density(a, mu, sigma) + gaussian_density(b, mu, sigma);
  for (int i = 1; i < steps; ++i) {
    acc += (i % 2 == 1 ? 4.0 : 2.0) * gaussian_density(a + i * h, mu, sigma);
  }
  CHECK(acc * h / 3.0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random streams are deterministic and schedule independent") {
  const RandomStream a(42);
  const RandomStream b(42);
  CHECK(a.key() == b.key());
  CHECK(a.sub(7).raw(3) == b.sub(7).raw(3));
  CHECK(a.sub(7).key() != a.sub(8).key());
  CHECK(RandomStream(43).key() != a.key());

  // Draw order does not matter: (key, counter) fully determines the value.
  const double late = a.uniform(1000);
  for (int c = 0; c < 1000; ++c) (void)a.uniform(c);
  CHECK(a.uniform(1000) == late);
}

TEST_CASE("uniform and normal draw moments") {
  const RandomStream s = RandomStream(7).sub(1);
  const int n = 20000;
  double su = 0.0, sn = 0.0, snn = 0.0;
  for (int c = 0; c < n; ++c) {
    const double u = s.uniform(c);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    su += u;
    const double z = s.sub(9).normal(c);
    sn += z;
    snn += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.05);
  CHECK(snn / n == doctest::Approx(1.0).epsilon(0.05));
}
