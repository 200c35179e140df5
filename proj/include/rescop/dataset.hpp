#pragma once

#include <Eigen/Dense>
#include <string>

namespace rescop {

// Immutable container for a multivariate regression sample: d response
// columns and q covariate columns over the same n rows.
class ObservationSet {
 public:
  ObservationSet(Eigen::MatrixXd y, Eigen::MatrixXd x);

  const Eigen::MatrixXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  Eigen::Index n() const noexcept { return y_.rows(); }
  Eigen::Index d() const noexcept { return y_.cols(); }
  Eigen::Index q() const noexcept { return x_.cols(); }

 private:
  Eigen::MatrixXd y_;
  Eigen::MatrixXd x_;
};

// Reads a CSV file with a header row.  Columns are bound by name: responses
// y1..yd and covariates x1..xq; any extra columns are ignored.
ObservationSet load_csv(const std::string& path, int d, int q);

void save_csv(const ObservationSet& data, const std::string& path);

}  // namespace rescop
