#include <cmath>

#include "doctest.h"
#include "rescop/special.hpp"

using namespace rescop;

TEST_SUITE("special") {

TEST_CASE("normal quantile inverts the cdf across the support") {
  const double ps[] = {1e-12, 1e-8, 1e-4, 0.01, 0.3,  0.5,
                       0.7,   0.99, 1.0 - 1e-4, 1.0 - 1e-8};
  for (double p : ps) {
    const double q = special::normal_quantile(p);
    CHECK(special::normal_cdf(q) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(special::normal_quantile(0.5) == 0.0);
  CHECK(special::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(special::normal_quantile(0.3) == -special::normal_quantile(0.7));
}

TEST_CASE("normal pdf differentiates the cdf") {
  for (double x : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
    const double h = 1e-6;
    const double fd =
        (special::normal_cdf(x + h) - special::normal_cdf(x - h)) / (2 * h);
    CHECK(special::normal_pdf(x) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("incomplete beta agrees with closed forms") {
  // I_x(a, 1) = x^a
  CHECK(special::incomplete_beta(2.5, 1.0, 0.3) ==
        doctest::Approx(std::pow(0.3, 2.5)).epsilon(1e-12));
  // I_x(1/2, 1/2) = (2/pi) asin(sqrt(x))
  CHECK(special::incomplete_beta(0.5, 0.5, 0.9) ==
        doctest::Approx(2.0 / 3.141592653589793 *
                        std::asin(std::sqrt(0.9)))
            .epsilon(1e-12));
  // integer parameters reduce to a binomial tail: I_x(5, 3) over 7 trials
  {
    const double x = 0.42;
    double want = 0.0;
    const double choose[] = {21.0, 7.0, 1.0};  // C(7,5), C(7,6), C(7,7)
    for (int j = 5; j <= 7; ++j) {
      want += choose[j - 5] * std::pow(x, j) * std::pow(1 - x, 7 - j);
    }
    CHECK(special::incomplete_beta(5.0, 3.0, x) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(special::incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(special::incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("student t cdf matches integrated density") {
  for (double df : {5.0, 3.0, 12.0}) {
    for (double x : {-5.0, -1.0, 0.0, 0.7, 3.0}) {
      // anchor at the median to avoid truncating the heavy tails
      const double body = special::integrate_adaptive(
          [&](double t) { return special::student_pdf(t, df); }, 0.0, x,
          1e-13);
      CHECK(special::student_cdf(x, df) ==
            doctest::Approx(0.5 + body).epsilon(1e-10));
    }
  }
}

TEST_CASE("student quantile round-trips through the cdf") {
  for (double df : {5.0, 8.0}) {
    for (double p : {1e-8, 1e-3, 0.1, 0.5, 0.9, 1.0 - 1e-3, 1.0 - 1e-8}) {
      const double q = special::student_quantile(p, df);
      CHECK(special::student_cdf(q, df) ==
            doctest::Approx(p).epsilon(1e-9));
    }
  }
  CHECK(special::student_quantile(0.5, 5.0) == 0.0);
  // Known value: t_{0.975, 5} = 2.570581835...
  CHECK(special::student_quantile(0.975, 5.0) ==
        doctest::Approx(2.5705818356363146).epsilon(1e-9));
}

TEST_CASE("debye function matches its defining integral") {
  for (double x : {0.3, 1.0, 5.0, 20.0}) {
    const double integral = special::integrate_adaptive(
        [](double t) { return t / std::expm1(t); }, 1e-12, x, 1e-13);
    CHECK(special::debye1(x) == doctest::Approx(integral / x).epsilon(1e-10));
  }
  // Series limit near zero: D1(x) = 1 - x/4 + x^2/36 - ...
  CHECK(special::debye1(1e-6) == doctest::Approx(1.0 - 2.5e-7).epsilon(1e-9));
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
  const auto rule = special::gauss_legendre(64);
  REQUIRE(rule.nodes.size() == 64);
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 0; k <= 20; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * std::pow(rule.nodes[i], k);
    }
    CHECK(acc == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  }
  for (double x : rule.nodes) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("adaptive simpson handles a known integral") {
  const double v = special::integrate_adaptive(
      [](double t) { return std::sin(t); }, 0.0, 3.141592653589793, 1e-12);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-11));
}

}  // TEST_SUITE
