#include "rescop/copulas.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "rescop/errors.hpp"
#include "rescop/special.hpp"

namespace rescop {

namespace {

constexpr double kBoundary = 1e-15;
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStudentDf = 5.0;

// ---------------------------------------------------------------------------
// Clayton, any dimension, alpha > 0.
//
// With t_j = -log u_j and S = sum_j exp(alpha t_j) - (d - 1):
//   log c = sum_{k=1}^{d-1} log(1 + k alpha) + (alpha + 1) sum_j t_j
//           - (1/alpha + d) log S.
// Derivatives of S enter through S'/S and S''/S; everything is evaluated in
// a factored form when alpha * max(t) is large enough to overflow exp.
// ---------------------------------------------------------------------------
namespace clayton {

struct Parts {
  double ln_s = 0.0;
  double sp_s = 0.0;   // S'/S
  double spp_s = 0.0;  // S''/S
  std::vector<double> t;
  std::vector<double> w_s;  // exp(alpha t_j) / S
};

Parts parts(std::span<const double> u, double alpha) {
  const std::size_t d = u.size();
  Parts p;
  p.t.resize(d);
  p.w_s.resize(d);
  double tmax = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    p.t[j] = -std::log(u[j]);
    tmax = std::max(tmax, p.t[j]);
  }
  const double m = alpha * tmax;
  if (m < 650.0) {
    double sm1 = 0.0, sp = 0.0, spp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = std::expm1(alpha * p.t[j]);
      const double w = e + 1.0;
      sm1 += e;
      sp += p.t[j] * w;
      spp += p.t[j] * p.t[j] * w;
      p.w_s[j] = w;
    }
    const double s = 1.0 + sm1;
    p.ln_s = std::log1p(sm1);
    p.sp_s = sp / s;
    p.spp_s = spp / s;
    for (auto& w : p.w_s) w /= s;
  } else {
    // Factor out exp(m) so the sums stay finite.
    double denom = 0.0, sp = 0.0, spp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = std::exp(alpha * p.t[j] - m);
      denom += w;
      sp += p.t[j] * w;
      spp += p.t[j] * p.t[j] * w;
      p.w_s[j] = w;
    }
    denom -= static_cast<double>(d - 1) * std::exp(-m);
    p.ln_s = m + std::log(denom);
    p.sp_s = sp / denom;
    p.spp_s = spp / denom;
    for (auto& w : p.w_s) w /= denom;
  }
  return p;
}

double log_density(std::span<const double> u, double alpha) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u, alpha);
  double lc = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    lc += std::log1p(static_cast<double>(k) * alpha);
  }
  double sum_t = 0.0;
  for (double t : p.t) sum_t += t;
  return lc + (alpha + 1.0) * sum_t - (1.0 / alpha + d) * p.ln_s;
}

double psi(std::span<const double> u, double alpha) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u, alpha);
  double k_term = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    const double kd = static_cast<double>(k);
    k_term += kd / (1.0 + kd * alpha);
  }
  double sum_t = 0.0;
  for (double t : p.t) sum_t += t;
  const double b = p.ln_s / alpha - p.sp_s;
  return k_term + sum_t + b / alpha - d * p.sp_s;
}

double psi_alpha(std::span<const double> u, double alpha) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u, alpha);
  double k_term = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    const double kd = static_cast<double>(k);
    const double r = kd / (1.0 + kd * alpha);
    k_term -= r * r;
  }
  const double b = p.ln_s / alpha - p.sp_s;
  const double var_s = p.spp_s - p.sp_s * p.sp_s;
  return k_term - 2.0 * b / (alpha * alpha) - (1.0 / alpha + d) * var_s;
}

double psi_u(std::span<const double> u, double alpha, int j) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u, alpha);
  const double tj = p.t[static_cast<std::size_t>(j)];
  const double inner =
      1.0 / alpha -
      (1.0 / alpha + d) * (1.0 + alpha * tj - alpha * p.sp_s);
  const double dpsi_dt = 1.0 + p.w_s[static_cast<std::size_t>(j)] * inner;
  return -dpsi_dt / u[static_cast<std::size_t>(j)];
}

}  // namespace clayton

// ---------------------------------------------------------------------------
// Frank.  At d = 2 the parameter runs over the whole real line minus zero
// and everything is available in closed form.  For d >= 3 (alpha > 0) the
// density is evaluated through the polynomial recursion
//   R_1(v) = v,  R_{k+1} = R_k'(v) (v - v^2),  v = z / (1 + z),
//   z = -prod_j a_j / E^{d-1},  a_j = 1 - e^{-alpha u_j},  E = 1 - e^{-alpha},
// which gives c = alpha^{d-1} |R_d(v)| prod_j e^{-alpha u_j} / a_j.
// ---------------------------------------------------------------------------
namespace frank {

// Closed forms are used for 1e-4 <= |alpha| <= 150.  Below that the score
// expressions cancel catastrophically near the removable singularity at 0;
// above it intermediate products overflow, so scores fall back to finite
// differences of the log density, which stays well scaled everywhere.
constexpr double kClosedFormLo = 1e-4;
constexpr double kClosedFormHi = 150.0;

double log_density2(double u, double v, double alpha) {
  if (alpha <= -kClosedFormHi) {
    // Work with b = -alpha > 0 and log-sum-exp the four terms of
    // D = e^{bu} + e^{bv} - e^{b} - e^{b(u+v)} to dodge overflow.
    const double b = -alpha;
    const double mu = b * std::max(1.0, u + v);
    const double den = std::fabs(std::exp(b * u - mu) + std::exp(b * v - mu) -
                                 std::exp(b - mu) - std::exp(b * (u + v) - mu));
    const double log_den = mu + std::log(den);
    const double log_e = b + std::log1p(-std::exp(-b));
    return std::log(b) + log_e + b * (u + v) - 2.0 * log_den;
  }
  const double e_all = -std::expm1(-alpha);
  const double eu = -std::expm1(-alpha * u);
  const double ev = -std::expm1(-alpha * v);
  const double den = e_all - eu * ev;
  return std::log(std::fabs(alpha)) + std::log(std::fabs(e_all)) -
         alpha * (u + v) - 2.0 * std::log(std::fabs(den));
}

double psi2(double u, double v, double alpha) {
  const double ema = std::exp(-alpha);
  const double emu = std::exp(-alpha * u);
  const double emv = std::exp(-alpha * v);
  const double e_all = -std::expm1(-alpha);
  const double eu = -std::expm1(-alpha * u);
  const double ev = -std::expm1(-alpha * v);
  const double den = e_all - eu * ev;
  const double dden = ema - u * emu * ev - v * emv * eu;
  return 1.0 / alpha + ema / e_all - (u + v) - 2.0 * dden / den;
}

double psi2_alpha(double u, double v, double alpha) {
  const double ema = std::exp(-alpha);
  const double emu = std::exp(-alpha * u);
  const double emv = std::exp(-alpha * v);
  const double e_all = -std::expm1(-alpha);
  const double eu = -std::expm1(-alpha * u);
  const double ev = -std::expm1(-alpha * v);
  const double den = e_all - eu * ev;
  const double dden = ema - u * emu * ev - v * emv * eu;
  const double d2den = -ema + u * u * emu * ev + v * v * emv * eu -
                       2.0 * u * v * emu * emv;
  return -1.0 / (alpha * alpha) - ema * (e_all + ema) / (e_all * e_all) -
         2.0 * (d2den * den - dden * dden) / (den * den);
}

// Partial of psi2 in its first argument; callers swap arguments for j = 2.
double psi2_u(double u, double v, double alpha) {
  const double ema = std::exp(-alpha);
  const double emu = std::exp(-alpha * u);
  const double emv = std::exp(-alpha * v);
  const double e_all = -std::expm1(-alpha);
  const double eu = -std::expm1(-alpha * u);
  const double ev = -std::expm1(-alpha * v);
  const double den = e_all - eu * ev;
  const double dden = ema - u * emu * ev - v * emv * eu;
  const double dden_du = emu * ((alpha * u - 1.0) * ev - alpha * v * emv);
  const double dd_du = -alpha * emu * ev;
  return -1.0 - 2.0 * (dden_du * den - dden * dd_du) / (den * den);
}

std::vector<double> r_coeffs(int d) {
  std::vector<double> c = {0.0, 1.0};  // R_1 = v
  for (int k = 1; k < d; ++k) {
    std::vector<double> nc(c.size() + 1, 0.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
      const double di = static_cast<double>(i) * c[i];
      nc[i] += di;       // R' * v
      nc[i + 1] -= di;   // R' * (-v^2)
    }
    c = std::move(nc);
  }
  return c;
}

double log_density_d(std::span<const double> u, double alpha) {
  const int d = static_cast<int>(u.size());
  const double e_all = -std::expm1(-alpha);
  double log_prod_a = 0.0;
  double sum_u = 0.0;
  for (double uj : u) {
    log_prod_a += std::log(-std::expm1(-alpha * uj));
    sum_u += uj;
  }
  const double z =
      -std::exp(log_prod_a - static_cast<double>(d - 1) * std::log(e_all));
  const double v = z / (1.0 + z);
  const auto coeffs = r_coeffs(d);
  double r = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) r = r * v + coeffs[i];
  return static_cast<double>(d - 1) * std::log(alpha) +
         std::log(std::fabs(r)) - alpha * sum_u - log_prod_a;
}

double tau_from_alpha_pos(double alpha) {
  // tau = 1 - (4/alpha) (1 - D1(alpha)), alpha > 0
  return 1.0 - 4.0 / alpha * (1.0 - special::debye1(alpha));
}

double dtau_dalpha_pos(double alpha) {
  const double d1 = special::debye1(alpha);
  // D1'(x) = (x/(e^x - 1) - D1(x)) / x
  const double em = std::expm1(alpha);
  const double d1p = (alpha / em - d1) / alpha;
  return 4.0 / (alpha * alpha) * (1.0 - d1) + 4.0 / alpha * d1p;
}

double alpha_from_tau_pos(double tau) {
  double lo = 1e-9;
  double hi = 1.0;
  while (tau_from_alpha_pos(hi) < tau) {
    hi *= 2.0;
    if (hi > 1e9) break;
  }
  double a = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = tau_from_alpha_pos(a) - tau;
    if (f > 0.0) {
      hi = a;
    } else {
      lo = a;
    }
    const double step = f / dtau_dalpha_pos(a);
    double next = a - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - a) <= 1e-15 * (1.0 + std::fabs(a))) {
      a = next;
      break;
    }
    a = next;
  }
  return a;
}

}  // namespace frank

// ---------------------------------------------------------------------------
// Gumbel, any dimension, alpha > 1.  With t_j = -log u_j, a_j = log t_j,
// S = sum t_j^alpha, A = S^{1/alpha} and theta = 1/alpha the density is
//   c = exp(-A) S^{-d} Q_d(A) alpha^d prod_j t_j^{alpha-1} / u_j,
// where Q_1 = theta x and Q_{k+1} = -theta x Q_k' + (theta x + k) Q_k.
// Weighted means of a_j give S'/S and S''/S in overflow-safe form.
// ---------------------------------------------------------------------------
namespace gumbel {

struct Parts {
  double ln_s = 0.0;
  double ma = 0.0;  // S'/S
  double mb = 0.0;  // S''/S
  double ln_a = 0.0;
  double big_a = 0.0;
  double sum_a = 0.0;
  double sum_t = 0.0;
};

Parts parts(std::span<const double> u, double alpha) {
  const std::size_t d = u.size();
  Parts p;
  std::vector<double> a(d);
  double m = -kInf;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = -std::log(u[j]);
    a[j] = std::log(t);
    p.sum_a += a[j];
    p.sum_t += t;
    m = std::max(m, alpha * a[j]);
  }
  double tot = 0.0, wa = 0.0, wb = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double w = std::exp(alpha * a[j] - m);
    tot += w;
    wa += a[j] * w;
    wb += a[j] * a[j] * w;
  }
  p.ln_s = m + std::log(tot);
  p.ma = wa / tot;
  p.mb = wb / tot;
  p.ln_a = p.ln_s / alpha;
  p.big_a = std::exp(p.ln_a);
  return p;
}

std::vector<double> q_coeffs(int d, double theta) {
  std::vector<double> c = {0.0, theta};  // Q_1 = theta x
  for (int k = 1; k < d; ++k) {
    std::vector<double> nc(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      nc[i + 1] += theta * c[i];
      nc[i] -= theta * static_cast<double>(i) * c[i];
      nc[i] += static_cast<double>(k) * c[i];
    }
    c = std::move(nc);
  }
  return c;
}

double log_density(std::span<const double> u, double alpha) {
  const int d = static_cast<int>(u.size());
  const Parts p = parts(u, alpha);
  const auto coeffs = q_coeffs(d, 1.0 / alpha);
  double q = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) q = q * p.big_a + coeffs[i];
  return -p.big_a - d * p.ln_s + std::log(q) + d * std::log(alpha) +
         (alpha - 1.0) * p.sum_a + p.sum_t;
}

double psi2(std::span<const double> u, double alpha) {
  const Parts p = parts(u, alpha);
  const double a2 = alpha * alpha;
  const double ap = p.big_a * (p.ma / alpha - p.ln_s / a2);
  return -ap + p.sum_a - p.ln_s / a2 + (1.0 / alpha - 2.0) * p.ma +
         (ap + 1.0) / (p.big_a + alpha - 1.0);
}

double psi2_alpha(std::span<const double> u, double alpha) {
  const Parts p = parts(u, alpha);
  const double a2 = alpha * alpha;
  const double a3 = a2 * alpha;
  const double bp = p.ma / alpha - p.ln_s / a2;
  const double bpp = p.mb / alpha - p.ma * p.ma / alpha -
                     2.0 * p.ma / a2 + 2.0 * p.ln_s / a3;
  const double ap = p.big_a * bp;
  const double app = p.big_a * (bp * bp + bpp);
  const double g = p.big_a + alpha - 1.0;
  return -app + 2.0 * p.ln_s / a3 - 2.0 * p.ma / a2 +
         (1.0 / alpha - 2.0) * (p.mb - p.ma * p.ma) +
         (app * g - (ap + 1.0) * (ap + 1.0)) / (g * g);
}

}  // namespace gumbel

// ---------------------------------------------------------------------------
// Gaussian with equicorrelation matrix, any dimension.  With z_j the normal
// scores, s1 = sum z_j, s2 = sum z_j^2, g1 = 1 + (d-1) rho and om = 1 - rho:
//   log c = -[(d-1) log om + log g1]/2 - (q - s2)/2,
//   q = (s2 - rho s1^2 / g1) / om.
// ---------------------------------------------------------------------------
namespace gauss {

struct Parts {
  double s1 = 0.0;
  double s2 = 0.0;
  std::vector<double> z;
};

Parts parts(std::span<const double> u) {
  Parts p;
  p.z.resize(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    p.z[j] = special::normal_quantile(u[j]);
    p.s1 += p.z[j];
    p.s2 += p.z[j] * p.z[j];
  }
  return p;
}

double log_density(std::span<const double> u, double rho) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u);
  const double g1 = 1.0 + (d - 1.0) * rho;
  const double om = 1.0 - rho;
  const double q = (p.s2 - rho * p.s1 * p.s1 / g1) / om;
  return -0.5 * ((d - 1.0) * std::log(om) + std::log(g1)) -
         0.5 * (q - p.s2);
}

double psi(std::span<const double> u, double rho) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u);
  const double g1 = 1.0 + (d - 1.0) * rho;
  const double om = 1.0 - rho;
  const double big_u = p.s2 - rho * p.s1 * p.s1 / g1;
  const double up = -p.s1 * p.s1 / (g1 * g1);
  const double qp = up / om + big_u / (om * om);
  return 0.5 * (d - 1.0) * (1.0 / om - 1.0 / g1) - 0.5 * qp;
}

double psi_alpha(std::span<const double> u, double rho) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u);
  const double g1 = 1.0 + (d - 1.0) * rho;
  const double om = 1.0 - rho;
  const double big_u = p.s2 - rho * p.s1 * p.s1 / g1;
  const double up = -p.s1 * p.s1 / (g1 * g1);
  const double upp = 2.0 * (d - 1.0) * p.s1 * p.s1 / (g1 * g1 * g1);
  const double qpp =
      upp / om + 2.0 * up / (om * om) + 2.0 * big_u / (om * om * om);
  return 0.5 * (d - 1.0) * (1.0 / (om * om) + (d - 1.0) / (g1 * g1)) -
         0.5 * qpp;
}

double psi_u(std::span<const double> u, double rho, int j) {
  const auto d = static_cast<double>(u.size());
  const Parts p = parts(u);
  const double g1 = 1.0 + (d - 1.0) * rho;
  const double om = 1.0 - rho;
  const double zj = p.z[static_cast<std::size_t>(j)];
  const double dpsi_dz =
      p.s1 / (g1 * g1 * om) - (zj - rho * p.s1 / g1) / (om * om);
  return dpsi_dz / special::normal_pdf(zj);
}

}  // namespace gauss

// ---------------------------------------------------------------------------
// Student t with five degrees of freedom and equicorrelation, any dimension.
// Scores fall back to finite differences of the log density.
// ---------------------------------------------------------------------------
namespace student {

double log_density(std::span<const double> u, double rho) {
  const auto d = static_cast<double>(u.size());
  const double nu = kStudentDf;
  double s1 = 0.0, s2 = 0.0, tail = 0.0;
  for (double uj : u) {
    const double x = special::student_quantile(uj, nu);
    s1 += x;
    s2 += x * x;
    tail += std::log1p(x * x / nu);
  }
  const double g1 = 1.0 + (d - 1.0) * rho;
  const double om = 1.0 - rho;
  const double q = (s2 - rho * s1 * s1 / g1) / om;
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * ((d - 1.0) * std::log(om) + std::log(g1)) -
         0.5 * (nu + d) * std::log1p(q / nu) -
         d * (std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) +
         0.5 * (nu + 1.0) * tail;
}

}  // namespace student

double logseries_draw(double p, RngStream& rng) {
  // Kemp's algorithm for the logarithmic series distribution.
  const double r = std::log1p(-p);
  const double v = rng.uniform_open01();
  if (v >= p) return 1.0;
  const double u = rng.uniform_open01();
  const double q = -std::expm1(r * u);
  if (v <= q * q) {
    const double k = std::floor(1.0 + std::log(v) / std::log(q));
    return std::max(1.0, k);
  }
  return (v <= q) ? 2.0 : 1.0;
}

}  // namespace

CopulaFamily::CopulaFamily(FamilyTag tag, int dim) : tag_(tag), dim_(dim) {
  if (dim < 2) {
    raise(Errc::invalid_argument,
          "copula dimension must be >= 2, got " + std::to_string(dim));
  }
}

std::string CopulaFamily::name() const {
  switch (tag_) {
    case FamilyTag::clayton: return "clayton";
    case FamilyTag::frank: return "frank";
    case FamilyTag::gumbel: return "gumbel";
    case FamilyTag::gaussian: return "gaussian";
    case FamilyTag::student_t5: return "student_t5";
  }
  return "unknown";
}

CopulaFamily CopulaFamily::from_name(const std::string& name, int dim) {
  if (name == "clayton") return CopulaFamily(FamilyTag::clayton, dim);
  if (name == "frank") return CopulaFamily(FamilyTag::frank, dim);
  if (name == "gumbel") return CopulaFamily(FamilyTag::gumbel, dim);
  if (name == "gaussian") return CopulaFamily(FamilyTag::gaussian, dim);
  if (name == "student_t5") return CopulaFamily(FamilyTag::student_t5, dim);
  raise(Errc::invalid_argument, "unknown copula family '" + name + "'");
}

ScoreClass CopulaFamily::score_class() const noexcept {
  return tag_ == FamilyTag::frank ? ScoreClass::bounded
                                  : ScoreClass::log_unbounded;
}

std::pair<double, double> CopulaFamily::parameter_domain() const {
  switch (tag_) {
    case FamilyTag::clayton:
      return {0.0, kInf};
    case FamilyTag::frank:
      return dim_ == 2 ? std::pair{-kInf, kInf} : std::pair{0.0, kInf};
    case FamilyTag::gumbel:
      return {1.0, kInf};
    case FamilyTag::gaussian:
    case FamilyTag::student_t5:
      // Equicorrelation stays positive definite only above -1/(d-1).
      return {dim_ == 2 ? -1.0 : -1.0 / (dim_ - 1.0), 1.0};
  }
  return {0.0, 0.0};
}

bool CopulaFamily::excludes_zero() const noexcept {
  return tag_ == FamilyTag::frank && dim_ == 2;
}

bool CopulaFamily::in_domain(double alpha) const {
  if (!std::isfinite(alpha)) return false;
  if (excludes_zero() && alpha == 0.0) return false;
  const auto [lo, hi] = parameter_domain();
  return alpha > lo && alpha < hi;
}

std::pair<double, double> CopulaFamily::attainable_tau() const {
  switch (tag_) {
    case FamilyTag::clayton:
    case FamilyTag::gumbel:
      return {0.0, 1.0};
    case FamilyTag::frank:
      return dim_ == 2 ? std::pair{-1.0, 1.0} : std::pair{0.0, 1.0};
    case FamilyTag::gaussian:
    case FamilyTag::student_t5: {
      const auto [lo, hi] = parameter_domain();
      return {2.0 / kPi * std::asin(lo), 2.0 / kPi * std::asin(hi)};
    }
  }
  return {0.0, 0.0};
}

void CopulaFamily::check_alpha(double alpha) const {
  if (!in_domain(alpha)) {
    const auto [lo, hi] = parameter_domain();
    raise(Errc::parameter_out_of_domain,
          name() + " parameter " + std::to_string(alpha) + " outside (" +
              std::to_string(lo) + ", " + std::to_string(hi) + ")" +
              (excludes_zero() ? " \\ {0}" : ""));
  }
}

void CopulaFamily::check_point(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != dim_) {
    raise(Errc::length_mismatch,
          "point has " + std::to_string(u.size()) + " coordinates, family is " +
              std::to_string(dim_) + "-dimensional");
  }
  for (double uj : u) {
    if (!(uj > kBoundary && uj < 1.0 - kBoundary)) {
      raise(Errc::point_on_boundary,
            "coordinate " + std::to_string(uj) +
                " outside (1e-15, 1 - 1e-15)");
    }
  }
}

double CopulaFamily::log_density(std::span<const double> u, double alpha) const {
  check_alpha(alpha);
  check_point(u);
  switch (tag_) {
    case FamilyTag::clayton:
      return clayton::log_density(u, alpha);
    case FamilyTag::frank:
      return dim_ == 2 ? frank::log_density2(u[0], u[1], alpha)
                       : frank::log_density_d(u, alpha);
    case FamilyTag::gumbel:
      return gumbel::log_density(u, alpha);
    case FamilyTag::gaussian:
      return gauss::log_density(u, alpha);
    case FamilyTag::student_t5:
      return student::log_density(u, alpha);
  }
  return 0.0;
}

double CopulaFamily::score_psi(std::span<const double> u, double alpha) const {
  check_alpha(alpha);
  check_point(u);
  switch (tag_) {
    case FamilyTag::clayton:
      return clayton::psi(u, alpha);
    case FamilyTag::frank:
      if (dim_ == 2 && std::fabs(alpha) >= frank::kClosedFormLo &&
          std::fabs(alpha) <= frank::kClosedFormHi) {
        return frank::psi2(u[0], u[1], alpha);
      }
      break;
    case FamilyTag::gumbel:
      if (dim_ == 2) return gumbel::psi2(u, alpha);
      break;
    case FamilyTag::gaussian:
      return gauss::psi(u, alpha);
    case FamilyTag::student_t5:
      break;
  }
  // Central difference of the log density.
  double h = 0x1.0p-17 * std::max(1.0, std::fabs(alpha));
  const auto [lo, hi] = parameter_domain();
  if (std::isfinite(lo)) h = std::min(h, 0.5 * (alpha - lo));
  if (std::isfinite(hi)) h = std::min(h, 0.5 * (hi - alpha));
  if (excludes_zero() && (alpha + h == 0.0 || alpha - h == 0.0)) h *= 0.9997;
  const double up = log_density(u, alpha + h);
  const double dn = log_density(u, alpha - h);
  return (up - dn) / (2.0 * h);
}

double CopulaFamily::score_dalpha(std::span<const double> u, double alpha) const {
  check_alpha(alpha);
  check_point(u);
  switch (tag_) {
    case FamilyTag::clayton:
      return clayton::psi_alpha(u, alpha);
    case FamilyTag::frank:
      if (dim_ == 2 && std::fabs(alpha) >= frank::kClosedFormLo &&
          std::fabs(alpha) <= frank::kClosedFormHi) {
        return frank::psi2_alpha(u[0], u[1], alpha);
      }
      break;
    case FamilyTag::gumbel:
      if (dim_ == 2) return gumbel::psi2_alpha(u, alpha);
      break;
    case FamilyTag::gaussian:
      return gauss::psi_alpha(u, alpha);
    case FamilyTag::student_t5:
      break;
  }
  // Second central difference of the log density.
  double h = 3e-4 * std::max(1.0, std::fabs(alpha));
  const auto [lo, hi] = parameter_domain();
  if (std::isfinite(lo)) h = std::min(h, 0.5 * (alpha - lo));
  if (std::isfinite(hi)) h = std::min(h, 0.5 * (hi - alpha));
  if (excludes_zero() && (alpha + h == 0.0 || alpha - h == 0.0)) h *= 0.9997;
  const double up = log_density(u, alpha + h);
  const double mid = log_density(u, alpha);
  const double dn = log_density(u, alpha - h);
  return (up - 2.0 * mid + dn) / (h * h);
}

double CopulaFamily::score_partial_u(std::span<const double> u, double alpha,
                                     int j) const {
  check_alpha(alpha);
  check_point(u);
  if (j < 1 || j > dim_) {
    raise(Errc::invalid_argument,
          "margin index " + std::to_string(j) + " outside 1.." +
              std::to_string(dim_));
  }
  const int j0 = j - 1;
  switch (tag_) {
    case FamilyTag::clayton:
      return clayton::psi_u(u, alpha, j0);
    case FamilyTag::frank:
      if (dim_ == 2 && std::fabs(alpha) >= frank::kClosedFormLo &&
          std::fabs(alpha) <= frank::kClosedFormHi) {
        return j0 == 0 ? frank::psi2_u(u[0], u[1], alpha)
                       : frank::psi2_u(u[1], u[0], alpha);
      }
      break;
    case FamilyTag::gaussian:
      return gauss::psi_u(u, alpha, j0);
    case FamilyTag::gumbel:
    case FamilyTag::student_t5:
      break;
  }
  // Boundary-aware central difference of the score in coordinate j.
  const double uj = u[static_cast<std::size_t>(j0)];
  const double h = std::min({1e-5, 0.5 * uj, 0.5 * (1.0 - uj)});
  std::vector<double> point(u.begin(), u.end());
  point[static_cast<std::size_t>(j0)] = uj + h;
  const double up = score_psi(point, alpha);
  point[static_cast<std::size_t>(j0)] = uj - h;
  const double dn = score_psi(point, alpha);
  return (up - dn) / (2.0 * h);
}

double CopulaFamily::tau_to_alpha(double tau) const {
  const auto [tlo, thi] = attainable_tau();
  const bool ok = tau > tlo && tau < thi && !(excludes_zero() && tau == 0.0) &&
                  std::isfinite(tau);
  if (!ok) {
    raise(Errc::tau_out_of_range,
          "tau " + std::to_string(tau) + " not attainable for " + name() +
              " (open interval (" + std::to_string(tlo) + ", " +
              std::to_string(thi) + ")" + (excludes_zero() ? " \\ {0}" : "") +
              ")");
  }
  switch (tag_) {
    case FamilyTag::clayton:
      return 2.0 * tau / (1.0 - tau);
    case FamilyTag::gumbel:
      return 1.0 / (1.0 - tau);
    case FamilyTag::gaussian:
    case FamilyTag::student_t5:
      return std::sin(kPi * tau / 2.0);
    case FamilyTag::frank: {
      if (tau == 0.0) break;  // unreachable: guarded above
      const double a = frank::alpha_from_tau_pos(std::fabs(tau));
      return tau > 0.0 ? a : -a;
    }
  }
  return 0.0;
}

double CopulaFamily::alpha_to_tau(double alpha) const {
  check_alpha(alpha);
  switch (tag_) {
    case FamilyTag::clayton:
      return alpha / (alpha + 2.0);
    case FamilyTag::gumbel:
      return (alpha - 1.0) / alpha;
    case FamilyTag::gaussian:
    case FamilyTag::student_t5:
      return 2.0 / kPi * std::asin(alpha);
    case FamilyTag::frank: {
      const double t = frank::tau_from_alpha_pos(std::fabs(alpha));
      return alpha > 0.0 ? t : -t;
    }
  }
  return 0.0;
}

Eigen::MatrixXd CopulaFamily::sample(double alpha, int n, RngStream& rng) const {
  check_alpha(alpha);
  if (n < 1) raise(Errc::invalid_argument, "sample size must be >= 1");
  Eigen::MatrixXd u(n, dim_);

  switch (tag_) {
    case FamilyTag::clayton: {
      // Gamma frailty: U_j = (1 + E_j / W)^(-1/alpha), W ~ Gamma(1/alpha).
      for (int i = 0; i < n; ++i) {
        const double w = rng.gamma(1.0 / alpha);
        for (int j = 0; j < dim_; ++j) {
          const double e = rng.exponential();
          u(i, j) = std::exp(-std::log1p(e / w) / alpha);
        }
      }
      return u;
    }
    case FamilyTag::gumbel: {
      // Positive stable frailty via the Chambers-Mallows-Stuck formula.
      const double theta = 1.0 / alpha;
      for (int i = 0; i < n; ++i) {
        const double g = kPi * rng.uniform_open01();
        const double we = rng.exponential();
        const double w =
            std::pow(std::sin((1.0 - theta) * g) / we, (1.0 - theta) / theta) *
            std::sin(theta * g) / std::pow(std::sin(g), 1.0 / theta);
        for (int j = 0; j < dim_; ++j) {
          const double e = rng.exponential();
          u(i, j) = std::exp(-std::pow(e / w, theta));
        }
      }
      return u;
    }
    case FamilyTag::frank: {
      if (dim_ == 2) {
        // Conditional inversion; valid for either sign of alpha.
        const double g = std::expm1(-alpha);
        for (int i = 0; i < n; ++i) {
          const double uu = rng.uniform_open01();
          const double w = rng.uniform_open01();
          const double a = std::exp(-alpha * uu);
          const double v =
              -std::log1p(w * g / (a - w * (a - 1.0))) / alpha;
          u(i, 0) = uu;
          u(i, 1) = v;
        }
        return u;
      }
      // Logarithmic-series frailty, alpha > 0.
      const double p = -std::expm1(-alpha);
      const double g = std::expm1(-alpha);
      for (int i = 0; i < n; ++i) {
        const double m = logseries_draw(p, rng);
        for (int j = 0; j < dim_; ++j) {
          const double e = rng.exponential();
          u(i, j) = -std::log1p(g * std::exp(-e / m)) / alpha;
        }
      }
      return u;
    }
    case FamilyTag::gaussian:
    case FamilyTag::student_t5: {
      Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(dim_, dim_, alpha);
      corr.diagonal().setOnes();
      Eigen::LLT<Eigen::MatrixXd> llt(corr);
      if (llt.info() != Eigen::Success) {
        raise(Errc::parameter_out_of_domain,
              "correlation " + std::to_string(alpha) +
                  " too close to the boundary to factorize");
      }
      const Eigen::MatrixXd chol = llt.matrixL();
      Eigen::VectorXd g(dim_);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim_; ++j) g[j] = rng.normal();
        Eigen::VectorXd z = chol * g;
        if (tag_ == FamilyTag::gaussian) {
          for (int j = 0; j < dim_; ++j) u(i, j) = special::normal_cdf(z[j]);
        } else {
          const double chi2 = 2.0 * rng.gamma(0.5 * kStudentDf);
          const double scale = std::sqrt(kStudentDf / chi2);
          for (int j = 0; j < dim_; ++j) {
            u(i, j) = special::student_cdf(z[j] * scale, kStudentDf);
          }
        }
      }
      return u;
    }
  }
  raise(Errc::invalid_argument, "unhandled family");
}

}  // namespace rescop
