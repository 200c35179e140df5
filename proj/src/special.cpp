#include "rescop/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rescop/errors.hpp"

namespace rescop::special {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

// Rational approximation for the normal quantile (Acklam's coefficients).
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
  constexpr double plow = 0.02425;

  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cont_frac(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3.0e-16;
  constexpr double fpmin = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double adaptive_simpson_step(const std::function<double(double)>& f, double a,
                             double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol,
                               depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol,
                               depth - 1);
}

}  // namespace

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    raise(Errc::quantile_argument_out_of_range,
          "normal quantile requires p in (0,1), got " + std::to_string(p));
  }
  double x = normal_quantile_approx(p);
  // Halley refinement; skipped far out in the tails where exp(x^2/2)
  // would overflow and the approximation alone is already adequate.
  for (int pass = 0; pass < 2 && std::fabs(x) < 20.0; ++pass) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) {
    raise(Errc::invalid_argument, "incomplete_beta requires a, b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - bt * beta_cont_frac(b, a, 1.0 - x) / b;
}

double student_pdf(double x, double df) {
  if (!(df > 0.0)) raise(Errc::invalid_argument, "student df must be > 0");
  const double lc = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                    0.5 * std::log(df * kPi);
  return std::exp(lc - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double student_cdf(double x, double df) {
  if (!(df > 0.0)) raise(Errc::invalid_argument, "student df must be > 0");
  if (x == 0.0) return 0.5;
  if (df == 5.0) {
    // Closed form for five degrees of freedom (hot path).
    const double t = x / std::sqrt(5.0);
    const double w = 1.0 / (1.0 + t * t);
    const double body =
        std::atan(t) + t * w * (1.0 + (2.0 / 3.0) * w);
    return 0.5 + body / kPi;
  }
  const double t = df / (df + x * x);
  const double p = 0.5 * incomplete_beta(0.5 * df, 0.5, t);
  return x > 0.0 ? 1.0 - p : p;
}

double student_quantile(double p, double df) {
  if (!(df > 0.0)) raise(Errc::invalid_argument, "student df must be > 0");
  if (!(p > 0.0 && p < 1.0)) {
    raise(Errc::quantile_argument_out_of_range,
          "student quantile requires p in (0,1), got " + std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // Solve on the positive half line for the upper-tail mass q, which keeps
  // full precision when p is close to 0 or 1.
  const double q = std::min(p, 1.0 - p);
  const double sign = (p > 0.5) ? 1.0 : -1.0;

  // Cornish-Fisher style start from the normal quantile.
  const double z = normal_quantile(1.0 - q);
  const double z3 = z * z * z;
  const double z5 = z3 * z * z;
  double x = z + (z3 + z) / (4.0 * df) +
             (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df);
  if (!(x > 0.0)) x = 0.5;

  // Bracket the root of G(x) = P(T > x) - q, G decreasing.
  double lo = 0.0;
  double hi = x;
  auto upper_tail = [df](double t) {
    const double w = df / (df + t * t);
    return 0.5 * incomplete_beta(0.5 * df, 0.5, w);
  };
  while (upper_tail(hi) > q) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e200) break;
  }

  for (int iter = 0; iter < 100; ++iter) {
    const double g = upper_tail(x) - q;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double deriv = -student_pdf(x, df);
    double next = x - g / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-14 * (1.0 + std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return sign * x;
}

double debye1(double x) {
  if (!(x > 0.0)) raise(Errc::invalid_argument, "debye1 requires x > 0");
  auto integrand = [](double t) {
    if (t < 1e-8) return 1.0 - 0.5 * t;
    const double em = std::expm1(t);
    if (!std::isfinite(em)) return 0.0;
    return t / em;
  };
  // The integrand is negligible past t = 60.
  const double upper = std::min(x, 60.0);
  double value = integrate_adaptive(integrand, 0.0, upper, 1e-13);
  return value / x;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

QuadratureRule gauss_legendre(int points) {
  if (points < 1) raise(Errc::invalid_argument, "quadrature needs >= 1 point");
  QuadratureRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const int m = (points + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n from the Chebyshev-based starting guess.
    double z = std::cos(kPi * (i + 0.75) / (points + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < points; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = points * (z * p0 - p1) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p0 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    // Map from [-1,1] to [0,1].
    rule.nodes[i] = 0.5 * (1.0 - z);
    rule.nodes[points - 1 - i] = 0.5 * (1.0 + z);
    const double w = 1.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[i] = w;
    rule.weights[points - 1 - i] = w;
  }
  return rule;
}

}  // namespace rescop::special
