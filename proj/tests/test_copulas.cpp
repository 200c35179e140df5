#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "rescop/copulas.hpp"
#include "rescop/errors.hpp"
#include "rescop/ranks.hpp"
#include "rescop/rng.hpp"
#include "rescop/special.hpp"

using namespace rescop;
using testutil::spanv;

namespace {

// Explicit two-dimensional density formulas, written independently of the
// library implementation, used as oracles below.

double clayton_logc2(double u, double v, double a) {
  return std::log1p(a) - (1 + a) * (std::log(u) + std::log(v)) -
         (2 + 1 / a) * std::log(std::pow(u, -a) + std::pow(v, -a) - 1);
}

double frank_logc2(double u, double v, double a) {
  const double num = a * (1 - std::exp(-a)) * std::exp(-a * (u + v));
  const double den = (1 - std::exp(-a)) -
                     (1 - std::exp(-a * u)) * (1 - std::exp(-a * v));
  return std::log(num / (den * den));
}

double gumbel_logc2(double u, double v, double a) {
  const double x = -std::log(u), y = -std::log(v);
  const double s = std::pow(x, a) + std::pow(y, a);
  const double big_a = std::pow(s, 1 / a);
  return -big_a + (a - 1) * (std::log(x) + std::log(y)) - std::log(u * v) +
         (2 / a - 2) * std::log(s) + std::log1p((a - 1) / big_a);
}

double gaussian_logc2(double u, double v, double r) {
  const double x = special::normal_quantile(u);
  const double y = special::normal_quantile(v);
  return -0.5 * std::log(1 - r * r) -
         (r * r * (x * x + y * y) - 2 * r * x * y) / (2 * (1 - r * r));
}

double student5_logc2(double u, double v, double r) {
  const double nu = 5.0;
  const double x = special::student_quantile(u, nu);
  const double y = special::student_quantile(v, nu);
  const double quad = (x * x - 2 * r * x * y + y * y) / (nu * (1 - r * r));
  const double log_joint = std::lgamma((nu + 2) / 2) - std::lgamma(nu / 2) -
                           std::log(nu * 3.141592653589793) -
                           0.5 * std::log(1 - r * r) -
                           (nu + 2) / 2 * std::log1p(quad);
  return log_joint - std::log(special::student_pdf(x, nu)) -
         std::log(special::student_pdf(y, nu));
}

double logc2_oracle(FamilyTag tag, double u, double v, double a) {
  switch (tag) {
    case FamilyTag::clayton: return clayton_logc2(u, v, a);
    case FamilyTag::frank: return frank_logc2(u, v, a);
    case FamilyTag::gumbel: return gumbel_logc2(u, v, a);
    case FamilyTag::gaussian: return gaussian_logc2(u, v, a);
    case FamilyTag::student_t5: return student5_logc2(u, v, a);
  }
  return 0.0;
}

const FamilyTag kAllFamilies[] = {FamilyTag::clayton, FamilyTag::frank,
                                  FamilyTag::gumbel, FamilyTag::gaussian,
                                  FamilyTag::student_t5};

double ld(const CopulaFamily& f, const std::vector<double>& u, double a) {
  return f.log_density(u, a);
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

}  // namespace

TEST_SUITE("copulas") {

TEST_CASE("two-dimensional log densities match explicit formulas") {
  const double grid[] = {0.05, 0.2, 0.5, 0.73, 0.95};
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    for (double tau : {0.25, 0.5, 0.75}) {
      const double a = f.tau_to_alpha(tau);
      for (double u : grid) {
        for (double v : grid) {
          const double got = ld(f, {u, v}, a);
          const double want = logc2_oracle(tag, u, v, a);
          INFO(f.name(), " tau=", tau, " u=", u, " v=", v);
          CHECK(std::fabs(got - want) < 1e-8 * std::max(1.0, std::fabs(want)));
        }
      }
    }
  }
  // Negative dependence for the families that support it at d = 2.
  for (FamilyTag tag :
       {FamilyTag::frank, FamilyTag::gaussian, FamilyTag::student_t5}) {
    const CopulaFamily f(tag, 2);
    const double a = f.tau_to_alpha(-0.5);
    for (double u : grid) {
      for (double v : grid) {
        CHECK(std::fabs(ld(f, {u, v}, a) - logc2_oracle(tag, u, v, a)) <
              1e-8);
      }
    }
  }
}

TEST_CASE("three-dimensional density marginalizes to the bivariate one") {
  const auto rule = special::gauss_legendre(160);
  const double pts[][2] = {{0.3, 0.6}, {0.15, 0.85}, {0.5, 0.5}};
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f3(tag, 3);
    const CopulaFamily f2(tag, 2);
    const double a = f3.tau_to_alpha(0.5);
    for (const auto& p : pts) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] *
               std::exp(ld(f3, {p[0], p[1], rule.nodes[i]}, a));
      }
      const double want = std::exp(ld(f2, {p[0], p[1]}, a));
      INFO(f3.name(), " point (", p[0], ",", p[1], ")");
      CHECK(acc == doctest::Approx(want).epsilon(5e-5));
    }
  }
}

TEST_CASE("parameter scores match finite differences of the log density") {
  RngStream rng(424242);
  for (FamilyTag tag : kAllFamilies) {
    for (int dim : {2, 3}) {
      const CopulaFamily f(tag, dim);
      for (double tau : {0.35, 0.6}) {
        const double a = f.tau_to_alpha(tau);
        const double h = 1e-6 * std::max(1.0, std::fabs(a));
        for (int rep = 0; rep < 20; ++rep) {
          std::vector<double> u(static_cast<std::size_t>(dim));
          for (auto& x : u) x = 0.02 + 0.96 * rng.uniform_open01();
          const double fd = (ld(f, u, a + h) - ld(f, u, a - h)) / (2 * h);
          const double psi = f.score_psi(u, a);
          INFO(f.name(), " d=", dim, " tau=", tau, " rep=", rep);
          CHECK(rel_err(psi, fd) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("score slope matches finite differences of the score") {
  RngStream rng(31337);
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    const double a = f.tau_to_alpha(0.5);
    const double h = 2e-5 * std::max(1.0, std::fabs(a));
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<double> u{0.03 + 0.94 * rng.uniform_open01(),
                            0.03 + 0.94 * rng.uniform_open01()};
      const double fd = (f.score_psi(u, a + h) - f.score_psi(u, a - h)) / (2 * h);
      INFO(f.name(), " rep=", rep);
      CHECK(rel_err(f.score_dalpha(u, a), fd) < 2e-4);
    }
  }
}

TEST_CASE("coordinate partials of the score match finite differences") {
  RngStream rng(777);
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    const double a = f.tau_to_alpha(0.5);
    for (int rep = 0; rep < 15; ++rep) {
      std::vector<double> u{0.05 + 0.9 * rng.uniform_open01(),
                            0.05 + 0.9 * rng.uniform_open01()};
      for (int j = 1; j <= 2; ++j) {
        std::vector<double> up = u, dn = u;
        const double h = 1e-6;
        up[static_cast<std::size_t>(j - 1)] += h;
        dn[static_cast<std::size_t>(j - 1)] -= h;
        const double fd = (f.score_psi(up, a) - f.score_psi(dn, a)) / (2 * h);
        INFO(f.name(), " rep=", rep, " j=", j);
        CHECK(rel_err(f.score_partial_u(u, a, j), fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("gaussian score partial has the known independence value") {
  const CopulaFamily f(FamilyTag::gaussian, 2);
  const std::vector<double> u{0.5, 0.3};
  const double want = special::normal_quantile(0.3) /
                      special::normal_pdf(special::normal_quantile(0.5));
  CHECK(f.score_partial_u(u, 0.0, 1) ==
        doctest::Approx(want).epsilon(1e-8));
  // and the score itself at independence is the product of normal scores
  CHECK(f.score_psi(u, 0.0) ==
        doctest::Approx(special::normal_quantile(0.5) *
                        special::normal_quantile(0.3))
            .epsilon(1e-10));
}

TEST_CASE("tau alpha maps: closed forms and round trips") {
  const CopulaFamily clayton(FamilyTag::clayton, 2);
  const CopulaFamily gumbel(FamilyTag::gumbel, 2);
  const CopulaFamily gauss(FamilyTag::gaussian, 2);
  const CopulaFamily frank(FamilyTag::frank, 2);
  CHECK(clayton.tau_to_alpha(0.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(gumbel.tau_to_alpha(0.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(gumbel.tau_to_alpha(0.999) == doctest::Approx(1000.0).epsilon(1e-10));
  CHECK(gauss.tau_to_alpha(0.5) ==
        doctest::Approx(std::sin(3.141592653589793 / 4)).epsilon(1e-14));

  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    const double tol = tag == FamilyTag::frank ? 1e-8 : 1e-10;
    for (double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      CHECK(std::fabs(f.alpha_to_tau(f.tau_to_alpha(tau)) - tau) < tol);
    }
  }
  for (FamilyTag tag :
       {FamilyTag::frank, FamilyTag::gaussian, FamilyTag::student_t5}) {
    const CopulaFamily f(tag, 2);
    for (double tau : {-0.9, -0.5, -0.1}) {
      CHECK(std::fabs(f.alpha_to_tau(f.tau_to_alpha(tau)) - tau) < 1e-8);
    }
  }
  CHECK_THROWS_WITH_AS(clayton.tau_to_alpha(-0.2),
                       doctest::Contains("TauOutOfRange"), Error);
  CHECK_THROWS_AS(gumbel.tau_to_alpha(1.0), Error);
  CHECK_THROWS_AS(frank.tau_to_alpha(0.0), Error);
}

TEST_CASE("clayton tau map agrees with the concordance integral") {
  // tau = 4 E[C(U,V)] - 1, evaluated by quadrature with the explicit
  // formulas above rather than anything from the library.
  const double a = 2.0;
  const auto rule = special::gauss_legendre(256);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double u = rule.nodes[i], v = rule.nodes[k];
      const double big_c =
          std::pow(std::pow(u, -a) + std::pow(v, -a) - 1.0, -1.0 / a);
      acc += rule.weights[i] * rule.weights[k] *
             std::exp(clayton_logc2(u, v, a)) * big_c;
    }
  }
  const double tau_quad = 4.0 * acc - 1.0;
  const CopulaFamily f(FamilyTag::clayton, 2);
  CHECK(f.alpha_to_tau(2.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tau_quad == doctest::Approx(f.alpha_to_tau(2.0)).epsilon(2e-3));
}

TEST_CASE("frank tau map agrees with the concordance integral") {
  const CopulaFamily f(FamilyTag::frank, 2);
  const double a = f.tau_to_alpha(0.5);
  const auto rule = special::gauss_legendre(256);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double u = rule.nodes[i], v = rule.nodes[k];
      const double big_c =
          -1.0 / a *
          std::log1p(std::expm1(-a * u) * std::expm1(-a * v) /
                     std::expm1(-a));
      acc += rule.weights[i] * rule.weights[k] *
             std::exp(frank_logc2(u, v, a)) * big_c;
    }
  }
  CHECK(4.0 * acc - 1.0 == doctest::Approx(0.5).epsilon(5e-4));
}

TEST_CASE("densities integrate to one over the clipped square") {
  const auto rule = special::gauss_legendre(128);
  const double lo = 1e-6, hi = 1.0 - 1e-6;
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    const double a = f.tau_to_alpha(0.5);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double u = lo + (hi - lo) * rule.nodes[i];
        const double v = lo + (hi - lo) * rule.nodes[k];
        acc += rule.weights[i] * rule.weights[k] * std::exp(ld(f, {u, v}, a));
      }
    }
    acc *= (hi - lo) * (hi - lo);
    INFO(f.name());
    CHECK(acc > 0.995);
    CHECK(acc < 1.005);
  }
}

TEST_CASE("log density is exchangeable") {
  RngStream rng(8);
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f2(tag, 2);
    const CopulaFamily f3(tag, 3);
    const double a2 = f2.tau_to_alpha(0.5);
    const double a3 = f3.tau_to_alpha(0.5);
    for (int rep = 0; rep < 10; ++rep) {
      const double u = 0.05 + 0.9 * rng.uniform_open01();
      const double v = 0.05 + 0.9 * rng.uniform_open01();
      const double w = 0.05 + 0.9 * rng.uniform_open01();
      CHECK(ld(f2, {u, v}, a2) ==
            doctest::Approx(ld(f2, {v, u}, a2)).epsilon(1e-13));
      const double base = ld(f3, {u, v, w}, a3);
      CHECK(ld(f3, {w, v, u}, a3) == doctest::Approx(base).epsilon(1e-12));
      CHECK(ld(f3, {v, w, u}, a3) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("domain and boundary guards") {
  const CopulaFamily clayton(FamilyTag::clayton, 2);
  CHECK_THROWS_WITH_AS(ld(clayton, {0.5, 0.5}, -0.5),
                       doctest::Contains("ParameterOutOfDomain"), Error);
  CHECK_THROWS_AS(ld(clayton, {0.5, 0.5}, 0.0), Error);
  CHECK_THROWS_WITH_AS(ld(clayton, {1e-16, 0.5}, 2.0),
                       doctest::Contains("PointOnBoundary"), Error);
  CHECK_THROWS_AS(ld(clayton, {0.5, 1.0 - 1e-17}, 2.0), Error);

  const CopulaFamily gumbel(FamilyTag::gumbel, 2);
  CHECK_THROWS_AS(ld(gumbel, {0.5, 0.5}, 1.0), Error);
  CHECK_NOTHROW(ld(gumbel, {0.5, 0.5}, 1.0 + 1e-9));

  const CopulaFamily frank2(FamilyTag::frank, 2);
  CHECK_THROWS_AS(ld(frank2, {0.5, 0.5}, 0.0), Error);
  CHECK_NOTHROW(ld(frank2, {0.5, 0.5}, -5.0));
  const CopulaFamily frank3(FamilyTag::frank, 3);
  CHECK_THROWS_AS(ld(frank3, {0.5, 0.5, 0.5}, -5.0), Error);

  const CopulaFamily gauss3(FamilyTag::gaussian, 3);
  // equicorrelation must keep the matrix positive definite: rho > -1/(d-1)
  CHECK_THROWS_AS(ld(gauss3, {0.5, 0.5, 0.5}, -0.6), Error);
  CHECK_NOTHROW(ld(gauss3, {0.5, 0.5, 0.5}, -0.45));

  CHECK_THROWS_AS(CopulaFamily(FamilyTag::clayton, 1), Error);
  CHECK_THROWS_AS(CopulaFamily::from_name("nosuch", 2), Error);
  CHECK(CopulaFamily::from_name("gumbel", 2).tag() == FamilyTag::gumbel);
}

TEST_CASE("frank behaves at the independence limit and deep negative values") {
  const CopulaFamily f(FamilyTag::frank, 2);
  const std::vector<double> u{0.3, 0.8};
  CHECK(std::isfinite(f.score_psi(u, 1e-9)));
  CHECK(std::isfinite(f.score_dalpha(u, 1e-9)));
  CHECK(std::isfinite(f.log_density(u, 1e-9)));
  // near zero the density approaches independence
  CHECK(f.log_density(u, 1e-9) == doctest::Approx(0.0).epsilon(1e-6));
  // strongly negative parameters use the overflow-safe branch
  CHECK(std::isfinite(f.log_density(u, -200.0)));
  CHECK(std::isfinite(f.score_psi(u, -200.0)));
  // continuity across the internal evaluation switch
  const double lo = f.log_density(u, -150.0 + 1e-8);
  const double hi = f.log_density(u, -150.0 - 1e-8);
  CHECK(lo == doctest::Approx(hi).epsilon(1e-6));
}

TEST_CASE("score class split") {
  CHECK(CopulaFamily(FamilyTag::frank, 2).score_class() ==
        ScoreClass::bounded);
  for (FamilyTag tag : {FamilyTag::clayton, FamilyTag::gumbel,
                        FamilyTag::gaussian, FamilyTag::student_t5}) {
    CHECK(CopulaFamily(tag, 2).score_class() == ScoreClass::log_unbounded);
  }
  // grid evidence: frank's score stays bounded on a 101x101 interior grid
  const CopulaFamily frank(FamilyTag::frank, 2);
  const double af = frank.tau_to_alpha(0.5);
  double frank_max = 0.0;
  for (int i = 1; i <= 101; ++i) {
    for (int k = 1; k <= 101; ++k) {
      const std::vector<double> u{i / 102.0, k / 102.0};
      frank_max = std::max(frank_max, std::fabs(frank.score_psi(u, af)));
      frank_max =
          std::max(frank_max, std::fabs(frank.score_partial_u(u, af, 1)));
    }
  }
  CHECK(frank_max < 25.0);
  // while clayton's grows without bound walking a grid edge toward the
  // boundary (logarithmically, as the class name says)
  const CopulaFamily clayton(FamilyTag::clayton, 2);
  const double ac = clayton.tau_to_alpha(0.75);
  double prev = 0.0;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    double grid_max = 0.0;
    for (double other : {delta, 0.25, 0.5, 0.75, 1.0 - delta}) {
      const std::vector<double> u{delta, other};
      grid_max = std::max(grid_max, std::fabs(clayton.score_psi(u, ac)));
    }
    CHECK(grid_max > prev + 1.0);
    prev = grid_max;
  }
  CHECK(prev > 8.0);
}

TEST_CASE("samplers reproduce the tau map and uniform margins") {
  const int n = 20000;
  for (FamilyTag tag : kAllFamilies) {
    for (int dim : {2, 3}) {
      const CopulaFamily f(tag, dim);
      for (double tau : {0.5, 0.75}) {
        RngStream rng(1000 + static_cast<int>(tag));
        const double a = f.tau_to_alpha(tau);
        const Eigen::MatrixXd u = f.sample(a, n, rng);
        REQUIRE(u.rows() == n);
        REQUIRE(u.cols() == dim);
        CHECK(u.minCoeff() > 0.0);
        CHECK(u.maxCoeff() < 1.0);
        for (int j = 0; j < dim; ++j) {
          for (int k = j + 1; k < dim; ++k) {
            const Eigen::VectorXd cj = u.col(j), ck = u.col(k);
            const double t = kendall_tau(spanv(cj), spanv(ck));
            INFO(f.name(), " d=", dim, " tau=", tau, " pair ", j, k);
            CHECK(std::fabs(t - tau) < 0.02);
          }
        }
        // Kolmogorov-Smirnov distance of each margin against Uniform(0,1)
        for (int j = 0; j < dim; ++j) {
          std::vector<double> col(u.col(j).data(), u.col(j).data() + n);
          std::sort(col.begin(), col.end());
          double ks = 0.0;
          for (int i = 0; i < n; ++i) {
            const double fe = static_cast<double>(i + 1) / n;
            ks = std::max(ks, std::fabs(fe - col[static_cast<std::size_t>(i)]));
            ks = std::max(ks, std::fabs(col[static_cast<std::size_t>(i)] -
                                        static_cast<double>(i) / n));
          }
          CHECK(ks < 0.013);
        }
      }
    }
  }
  // negative dependence at d=2
  for (FamilyTag tag :
       {FamilyTag::frank, FamilyTag::gaussian, FamilyTag::student_t5}) {
    const CopulaFamily f(tag, 2);
    RngStream rng(17);
    const Eigen::MatrixXd u = f.sample(f.tau_to_alpha(-0.5), n, rng);
    const Eigen::VectorXd c0 = u.col(0), c1 = u.col(1);
    CHECK(std::fabs(kendall_tau(spanv(c0), spanv(c1)) + 0.5) < 0.02);
  }
  // gaussian at exact independence
  {
    const CopulaFamily f(FamilyTag::gaussian, 2);
    RngStream rng(18);
    const Eigen::MatrixXd u = f.sample(0.0, n, rng);
    const Eigen::VectorXd c0 = u.col(0), c1 = u.col(1);
    CHECK(std::fabs(kendall_tau(spanv(c0), spanv(c1))) < 0.02);
  }
}

TEST_CASE("fisher information is positive at the truth") {
  const int n = 10000;
  for (FamilyTag tag : kAllFamilies) {
    const CopulaFamily f(tag, 2);
    RngStream rng(55);
    const double a = f.tau_to_alpha(0.5);
    const Eigen::MatrixXd u = f.sample(a, n, rng);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::vector<double> pt{u(i, 0), u(i, 1)};
      acc -= f.score_dalpha(pt, a);
    }
    INFO(f.name());
    CHECK(acc / n > 0.0);
  }
}

}  // TEST_SUITE
