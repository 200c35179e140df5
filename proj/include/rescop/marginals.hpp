#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rescop/dataset.hpp"
#include "rescop/rng.hpp"

namespace rescop {

enum class Transformation { identity, log };

// Scale model for the residual standard deviation: either held at one
// (location-only regression) or an absolute-residual regression whose
// fitted values are clamped below at 1e-6.
enum class ScaleDesign { constant_one, linear_positive };

struct MarginalSpec {
  int margin_index = 1;  // 1-based response column
  Transformation transformation = Transformation::identity;
  ScaleDesign scale_design = ScaleDesign::constant_one;
};

struct MarginalFit {
  MarginalSpec spec;
  Eigen::VectorXd theta_hat;   // location coefficients, then scale if fitted
  Eigen::VectorXd residuals;   // standardized residuals
};

// Least-squares fit of one margin: intercept-plus-linear location model on
// the (possibly log-transformed) response, optional second-stage scale fit.
MarginalFit fit_marginal(const ObservationSet& data, const MarginalSpec& spec);

enum class LawTag { normal, exponential, uniform, student_t };

// Univariate error distribution used for diagnostics and simulation.
class ErrorLaw {
 public:
  static ErrorLaw normal(double mean = 0.0, double sd = 1.0);
  static ErrorLaw exponential(double mean = 1.0);
  static ErrorLaw uniform(double lo = -1.0, double hi = 1.0);
  static ErrorLaw student_t(double df);  // df > 2; not rescaled to unit variance

  LawTag tag() const noexcept { return tag_; }
  double param1() const noexcept { return p1_; }
  double param2() const noexcept { return p2_; }
  std::string name() const;

  double density(double y) const;
  double cdf(double y) const;
  double quantile(double u) const;  // u strictly inside (0, 1)
  std::vector<double> sample(RngStream& rng, int count) const;

 private:
  ErrorLaw(LawTag tag, double p1, double p2) : tag_(tag), p1_(p1), p2_(p2) {}
  LawTag tag_;
  double p1_;
  double p2_;
};

}  // namespace rescop
