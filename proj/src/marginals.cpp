#include "rescop/marginals.hpp"

#include <cmath>

#include "rescop/errors.hpp"
#include "rescop/special.hpp"

namespace rescop {

namespace {

Eigen::VectorXd solve_ols(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    raise(Errc::rank_deficient_design,
          "design matrix has rank " + std::to_string(qr.rank()) + " < " +
              std::to_string(design.cols()));
  }
  return qr.solve(response);
}

}  // namespace

MarginalFit fit_marginal(const ObservationSet& data, const MarginalSpec& spec) {
  const auto d = data.d();
  if (spec.margin_index < 1 || spec.margin_index > d) {
    raise(Errc::invalid_argument,
          "margin_index " + std::to_string(spec.margin_index) +
              " outside 1.." + std::to_string(d));
  }
  const auto n = data.n();
  const auto q = data.q();

  Eigen::VectorXd response = data.y().col(spec.margin_index - 1);
  if (spec.transformation == Transformation::log) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(response[i] > 0.0)) {
        raise(Errc::non_positive_response_for_log,
              "margin " + std::to_string(spec.margin_index) + ", row " +
                  std::to_string(i + 1) + ": log transform needs y > 0");
      }
    }
    response = response.array().log().matrix();
  }

  Eigen::MatrixXd design(n, q + 1);
  design.col(0).setOnes();
  design.rightCols(q) = data.x();

  const Eigen::VectorXd theta_loc = solve_ols(design, response);
  Eigen::VectorXd residuals = response - design * theta_loc;

  if (spec.scale_design == ScaleDesign::constant_one) {
    MarginalFit fit;
    fit.spec = spec;
    fit.theta_hat = theta_loc;
    fit.residuals = std::move(residuals);
    return fit;
  }

  // Second stage: regress absolute residuals on the same design and divide
  // by the fitted scale, clamped away from zero.
  const Eigen::VectorXd abs_resid = residuals.array().abs().matrix();
  const Eigen::VectorXd gamma = solve_ols(design, abs_resid);
  Eigen::VectorXd scale = design * gamma;
  for (Eigen::Index i = 0; i < n; ++i) {
    scale[i] = std::max(scale[i], 1e-6);
    residuals[i] /= scale[i];
  }

  MarginalFit fit;
  fit.spec = spec;
  fit.theta_hat.resize(2 * (q + 1));
  fit.theta_hat << theta_loc, gamma;
  fit.residuals = std::move(residuals);
  return fit;
}

ErrorLaw ErrorLaw::normal(double mean, double sd) {
  if (!(sd > 0.0)) raise(Errc::invalid_argument, "normal sd must be > 0");
  return ErrorLaw(LawTag::normal, mean, sd);
}

ErrorLaw ErrorLaw::exponential(double mean) {
  if (!(mean > 0.0)) raise(Errc::invalid_argument, "exponential mean must be > 0");
  return ErrorLaw(LawTag::exponential, mean, 0.0);
}

ErrorLaw ErrorLaw::uniform(double lo, double hi) {
  if (!(lo < hi)) raise(Errc::invalid_argument, "uniform needs lo < hi");
  return ErrorLaw(LawTag::uniform, lo, hi);
}

ErrorLaw ErrorLaw::student_t(double df) {
  if (!(df > 2.0)) raise(Errc::invalid_argument, "student_t df must be > 2");
  return ErrorLaw(LawTag::student_t, df, 0.0);
}

std::string ErrorLaw::name() const {
  switch (tag_) {
    case LawTag::normal:
      return "normal(" + std::to_string(p1_) + "," + std::to_string(p2_) + ")";
    case LawTag::exponential:
      return "exponential(" + std::to_string(p1_) + ")";
    case LawTag::uniform:
      return "uniform(" + std::to_string(p1_) + "," + std::to_string(p2_) + ")";
    case LawTag::student_t:
      return "student_t(" + std::to_string(p1_) + ")";
  }
  return "unknown";
}

double ErrorLaw::density(double y) const {
  switch (tag_) {
    case LawTag::normal:
      return special::normal_pdf((y - p1_) / p2_) / p2_;
    case LawTag::exponential:
      return y < 0.0 ? 0.0 : std::exp(-y / p1_) / p1_;
    case LawTag::uniform:
      return (y < p1_ || y > p2_) ? 0.0 : 1.0 / (p2_ - p1_);
    case LawTag::student_t:
      return special::student_pdf(y, p1_);
  }
  return 0.0;
}

double ErrorLaw::cdf(double y) const {
  switch (tag_) {
    case LawTag::normal:
      return special::normal_cdf((y - p1_) / p2_);
    case LawTag::exponential:
      return y < 0.0 ? 0.0 : -std::expm1(-y / p1_);
    case LawTag::uniform:
      if (y <= p1_) return 0.0;
      if (y >= p2_) return 1.0;
      return (y - p1_) / (p2_ - p1_);
    case LawTag::student_t:
      return special::student_cdf(y, p1_);
  }
  return 0.0;
}

double ErrorLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    raise(Errc::quantile_argument_out_of_range,
          "quantile requires u in (0,1), got " + std::to_string(u));
  }
  switch (tag_) {
    case LawTag::normal:
      return p1_ + p2_ * special::normal_quantile(u);
    case LawTag::exponential:
      return -p1_ * std::log1p(-u);
    case LawTag::uniform:
      return p1_ + (p2_ - p1_) * u;
    case LawTag::student_t:
      return special::student_quantile(u, p1_);
  }
  return 0.0;
}

std::vector<double> ErrorLaw::sample(RngStream& rng, int count) const {
  if (count < 0) raise(Errc::invalid_argument, "sample count must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = quantile(rng.uniform_open01());
  return out;
}

}  // namespace rescop
