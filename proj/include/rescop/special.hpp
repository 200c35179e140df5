#pragma once

#include <functional>
#include <vector>

namespace rescop::special {

double normal_pdf(double x);
double normal_cdf(double x);

// Inverse of the standard normal cdf.  Rational initial guess refined by a
// Halley step on the erfc-based cdf; relative error below 1e-14 for
// p in [1e-300, 1 - 1e-16].  p must lie strictly inside (0, 1).
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double student_pdf(double x, double df);
double student_cdf(double x, double df);
double student_quantile(double p, double df);

// First Debye function D1(x) = (1/x) * integral_0^x t/(e^t - 1) dt, x > 0.
double debye1(double x);

// Adaptive Simpson integration with absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol);

struct QuadratureRule {
  std::vector<double> nodes;    // on (0, 1)
  std::vector<double> weights;  // sum to 1
};

// Gauss-Legendre rule mapped to the unit interval.
QuadratureRule gauss_legendre(int points);

}  // namespace rescop::special
