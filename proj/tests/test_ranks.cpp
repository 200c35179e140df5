#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rescop/errors.hpp"
#include "rescop/ranks.hpp"
#include "rescop/rng.hpp"

#include "helpers.hpp"

using namespace rescop;
using testutil::spanv;

namespace {

double kendall_brute(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const Eigen::Index n = u.size();
  long long concordant = 0, discordant = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const double s = (u(i) - u(k)) * (v(i) - v(k));
      if (s > 0) ++concordant;
      else ++discordant;
    }
  }
  const long long pairs = static_cast<long long>(n) * (n - 1) / 2;
  return static_cast<double>(concordant - discordant) /
         static_cast<double>(pairs);
}

}  // namespace

TEST_SUITE("ranks") {

TEST_CASE("pseudo-observations are ranks over n+1") {
  Eigen::MatrixXd eps(3, 2);
  eps << 3.1, 1.0, -0.2, 2.0, 0.7, 3.0;
  const PseudoSample p = pseudo_observations(eps);
  CHECK(p.u()(0, 0) == 0.75);
  CHECK(p.u()(1, 0) == 0.25);
  CHECK(p.u()(2, 0) == 0.50);
  CHECK(p.u()(0, 1) == 0.25);
  CHECK(p.u()(2, 1) == 0.75);

  Eigen::MatrixXd sorted(4, 2);
  sorted << 1, 1, 2, 2, 3, 3, 4, 4;
  const PseudoSample q = pseudo_observations(sorted);
  for (int i = 0; i < 4; ++i) {
    CHECK(q.u()(i, 0) == doctest::Approx((i + 1) / 5.0).epsilon(1e-15));
  }
}

TEST_CASE("each column is an exact permutation of k/(n+1)") {
  RngStream rng(99);
  const int n = 500;
  Eigen::MatrixXd eps(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) eps(i, j) = rng.normal();
  }
  const PseudoSample p = pseudo_observations(eps);
  for (int j = 0; j < 3; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = p.u()(i, j);
    std::sort(col.begin(), col.end());
    for (int k = 1; k <= n; ++k) {
      // bit-exact: the implementation must produce exactly rank/(n+1)
      CHECK(col[static_cast<std::size_t>(k - 1)] ==
            static_cast<double>(k) / (n + 1));
    }
  }
}

TEST_CASE("rank invariance under strictly increasing transforms") {
  RngStream rng(7);
  const int n = 200;
  Eigen::MatrixXd eps(n, 2), warped(n, 2);
  for (int i = 0; i < n; ++i) {
    eps(i, 0) = rng.normal();
    eps(i, 1) = rng.normal();
    warped(i, 0) = std::exp(eps(i, 0));
    warped(i, 1) = std::atan(eps(i, 1)) + 0.001 * eps(i, 1);
  }
  const PseudoSample a = pseudo_observations(eps);
  const PseudoSample b = pseudo_observations(warped);
  CHECK((a.u() - b.u()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ties are detected and counted") {
  Eigen::MatrixXd eps(4, 2);
  eps << 1, 1, 2, 2, 2, 3, 3, 4;
  CHECK_THROWS_WITH_AS(pseudo_observations(eps),
                       doctest::Contains("TiesDetected"), Error);
  Eigen::VectorXd u(3), v(3);
  u << 1, 1, 2;
  v << 1, 2, 3;
  CHECK_THROWS_AS(kendall_tau(spanv(u), spanv(v)), Error);
}

TEST_CASE("kendall tau known values") {
  Eigen::VectorXd u(3), v(3);
  u << 1, 2, 3;
  v << 1, 3, 2;
  CHECK(kendall_tau(spanv(u), spanv(v)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  Eigen::VectorXd w(5);
  Eigen::VectorXd z(5);
  w << 1, 2, 3, 4, 5;
  z << 2, 4, 6, 8, 10;
  const Eigen::VectorXd nz = -z;
  CHECK(kendall_tau(spanv(w), spanv(z)) == 1.0);
  CHECK(kendall_tau(spanv(w), spanv(nz)) == -1.0);

  Eigen::VectorXd bad(4);
  bad << 1, 2, 3, 4;
  CHECK_THROWS_WITH_AS(kendall_tau(spanv(w), spanv(bad)), doctest::Contains("LengthMismatch"),
                       Error);
}

TEST_CASE("merge-sort tau equals the quadratic oracle exactly") {
  RngStream rng(2024);
  for (int n : {2, 3, 17, 500}) {
    Eigen::VectorXd u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u(i) = rng.normal();
      v(i) = 0.4 * u(i) + rng.normal();
    }
    const Eigen::VectorXd nv = -v;
    CHECK(kendall_tau(spanv(u), spanv(v)) == kendall_brute(u, v));
    CHECK(kendall_tau(spanv(u), spanv(v)) == kendall_tau(spanv(v), spanv(u)));
    CHECK(kendall_tau(spanv(u), spanv(nv)) == -kendall_tau(spanv(u), spanv(v)));
  }
}

TEST_CASE("pseudo sample constructor validates entries") {
  Eigen::MatrixXd ok(2, 2);
  ok << 0.25, 0.5, 0.75, 0.25;
  CHECK_NOTHROW(PseudoSample{ok});
  Eigen::MatrixXd bad(2, 2);
  bad << 0.0, 0.5, 0.75, 0.25;
  CHECK_THROWS_AS(PseudoSample{bad}, Error);
}

}  // TEST_SUITE
