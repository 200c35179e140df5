#include "rescop/ranks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rescop/errors.hpp"

namespace rescop {

namespace {

// Number of values in the column that share their value with another entry.
std::size_t tied_entry_count(std::vector<double> sorted) {
  std::sort(sorted.begin(), sorted.end());
  std::size_t tied = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      if (run > 1) tied += run;
      run = 1;
    }
  }
  return tied;
}

// Counts inversions of `a` in place with merge sort.
std::uint64_t count_inversions(std::vector<double>& a) {
  const std::size_t n = a.size();
  std::vector<double> buffer(n);
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (a[i] <= a[j]) {
          buffer[k++] = a[i++];
        } else {
          inversions += mid - i;
          buffer[k++] = a[j++];
        }
      }
      while (i < mid) buffer[k++] = a[i++];
      while (j < hi) buffer[k++] = a[j++];
      std::copy(buffer.begin() + lo, buffer.begin() + hi, a.begin() + lo);
    }
  }
  return inversions;
}

}  // namespace

PseudoSample::PseudoSample(Eigen::MatrixXd u) : u_(std::move(u)) {
  if (u_.rows() < 2) {
    raise(Errc::row_count_too_small,
          "pseudo sample needs at least 2 rows, got " + std::to_string(u_.rows()));
  }
  if (u_.cols() < 2) {
    raise(Errc::invalid_argument, "pseudo sample needs at least 2 columns");
  }
  for (Eigen::Index j = 0; j < u_.cols(); ++j) {
    for (Eigen::Index i = 0; i < u_.rows(); ++i) {
      const double v = u_(i, j);
      if (!(v > 0.0 && v < 1.0)) {
        raise(Errc::non_finite_value,
              "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                  ") = " + std::to_string(v) + " is not inside (0,1)");
      }
    }
  }
}

PseudoSample pseudo_observations(const Eigen::MatrixXd& residuals) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index d = residuals.cols();
  if (n < 2) {
    raise(Errc::row_count_too_small,
          "need at least 2 rows, got " + std::to_string(n));
  }
  if (!residuals.allFinite()) {
    raise(Errc::non_finite_value, "residual matrix contains a non-finite value");
  }

  Eigen::MatrixXd u(n, d);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = residuals.col(j);
    std::vector<double> values(col.data(), col.data() + n);
    const std::size_t tied = tied_entry_count(values);
    if (tied > 0) {
      raise(Errc::ties_detected, "column " + std::to_string(j + 1) + " has " +
                                     std::to_string(tied) + " tied entries");
    }
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(),
              [&col](Eigen::Index a, Eigen::Index b) { return col[a] < col[b]; });
    for (Eigen::Index r = 0; r < n; ++r) {
      u(order[static_cast<std::size_t>(r)], j) =
          static_cast<double>(r + 1) / static_cast<double>(n + 1);
    }
  }
  return PseudoSample(std::move(u));
}

double kendall_tau(std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  if (n != v.size()) {
    raise(Errc::length_mismatch, "sequences have lengths " + std::to_string(n) +
                                     " and " + std::to_string(v.size()));
  }
  if (n < 2) {
    raise(Errc::row_count_too_small,
          "need at least 2 observations, got " + std::to_string(n));
  }
  for (auto seq : {u, v}) {
    const std::size_t tied =
        tied_entry_count(std::vector<double>(seq.begin(), seq.end()));
    if (tied > 0) {
      raise(Errc::ties_detected,
            std::to_string(tied) + " tied entries in input sequence");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(),
            [&u](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  std::vector<double> v_in_u_order(n);
  for (std::size_t i = 0; i < n; ++i) v_in_u_order[i] = v[order[i]];

  const std::uint64_t discordant = count_inversions(v_in_u_order);
  // single integer-derived division, so concordant-minus-discordant
  // counting reproduces this value bit for bit
  const auto pair_count = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const auto net = static_cast<std::int64_t>(pair_count) -
                   2 * static_cast<std::int64_t>(discordant);
  return static_cast<double>(net) / static_cast<double>(pair_count);
}

}  // namespace rescop
