#pragma once

#include <Eigen/Dense>
#include <span>

namespace rescop {

// Matrix of points strictly inside the unit hypercube, n rows by d columns.
// When produced by pseudo_observations each column is a permutation of
// {1/(n+1), ..., n/(n+1)}; arbitrary interior points are also accepted so
// that exact copula draws can be fed to the estimators directly.
class PseudoSample {
 public:
  explicit PseudoSample(Eigen::MatrixXd u);

  const Eigen::MatrixXd& u() const noexcept { return u_; }
  Eigen::Index n() const noexcept { return u_.rows(); }
  Eigen::Index d() const noexcept { return u_.cols(); }

 private:
  Eigen::MatrixXd u_;
};

// Columnwise rank transform r_i/(n+1).  Ties within a column are rejected;
// perturb the inputs (e.g. the CLI --jitter escape hatch) to break them.
PseudoSample pseudo_observations(const Eigen::MatrixXd& residuals);

// Kendall rank correlation via merge-sort inversion counting, O(n log n).
// Both sequences must be tie-free.
double kendall_tau(std::span<const double> u, std::span<const double> v);

}  // namespace rescop
