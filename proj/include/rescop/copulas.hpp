#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <utility>

#include "rescop/rng.hpp"

namespace rescop {

enum class FamilyTag { clayton, frank, gumbel, gaussian, student_t5 };

// Whether the parameter score stays bounded as a point approaches the
// boundary of the unit cube.  Drives the applicability diagnostics.
enum class ScoreClass { bounded, log_unbounded };

// One-parameter exchangeable copula family of fixed dimension d >= 2.
//
// Margin indices passed to score_partial_u are 1-based, matching the y1..yd
// column naming used everywhere else.  Evaluation points must be strictly
// inside (1e-15, 1 - 1e-15) per coordinate; anything closer to the boundary
// raises PointOnBoundary rather than being clamped.
class CopulaFamily {
 public:
  explicit CopulaFamily(FamilyTag tag, int dim = 2);

  FamilyTag tag() const noexcept { return tag_; }
  int dim() const noexcept { return dim_; }
  std::string name() const;
  static CopulaFamily from_name(const std::string& name, int dim = 2);

  ScoreClass score_class() const noexcept;

  // Open parameter interval.  For Frank at d = 2 the interval is the whole
  // real line and excludes_zero() reports the removable gap at 0.
  std::pair<double, double> parameter_domain() const;
  bool excludes_zero() const noexcept;
  bool in_domain(double alpha) const;

  // Open interval of Kendall tau values reachable inside the domain.
  std::pair<double, double> attainable_tau() const;

  double log_density(std::span<const double> u, double alpha) const;
  // d/dalpha log c (the parameter score).
  double score_psi(std::span<const double> u, double alpha) const;
  // d/dalpha of the score.
  double score_dalpha(std::span<const double> u, double alpha) const;
  // d/du_j of the score; j is 1-based.
  double score_partial_u(std::span<const double> u, double alpha, int j) const;

  double tau_to_alpha(double tau) const;
  double alpha_to_tau(double alpha) const;

  // n independent draws, one row per observation, entries in (0, 1).
  Eigen::MatrixXd sample(double alpha, int n, RngStream& rng) const;

 private:
  void check_alpha(double alpha) const;
  void check_point(std::span<const double> u) const;

  FamilyTag tag_;
  int dim_;
};

}  // namespace rescop
