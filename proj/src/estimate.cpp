#include "rescop/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rescop/errors.hpp"

namespace rescop {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kScoreTolPerPoint = 1e-10;
constexpr double kParamTol = 1e-9;
constexpr double kTauInitLimit = 0.99;

double mean_pairwise_tau(const PseudoSample& pseudo) {
  const auto& u = pseudo.u();
  const auto n = u.rows();
  double total = 0.0;
  int pairs = 0;
  for (Eigen::Index a = 0; a < u.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < u.cols(); ++b) {
      total += kendall_tau({u.col(a).data(), static_cast<std::size_t>(n)},
                           {u.col(b).data(), static_cast<std::size_t>(n)});
      ++pairs;
    }
  }
  return total / pairs;
}

// Interval of tau values usable as initializers / scan landmarks.
std::pair<double, double> init_tau_range(const CopulaFamily& family) {
  auto [lo, hi] = family.attainable_tau();
  lo = std::max(lo + 0.01, -kTauInitLimit);
  hi = std::min(hi - 0.01, kTauInitLimit);
  return {lo, hi};
}

double initial_alpha(const PseudoSample& pseudo, const CopulaFamily& family) {
  double tau = mean_pairwise_tau(pseudo);
  const auto [lo, hi] = init_tau_range(family);
  tau = std::clamp(tau, lo, hi);
  if (family.excludes_zero() && std::fabs(tau) < 0.005) {
    tau = tau < 0.0 ? -0.005 : 0.005;
  }
  return family.tau_to_alpha(tau);
}

struct ScoreSums {
  const PseudoSample& pseudo;
  const CopulaFamily& family;

  double score(double alpha) const {
    const auto& u = pseudo.u();
    std::vector<double> row(static_cast<std::size_t>(u.cols()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      for (Eigen::Index j = 0; j < u.cols(); ++j) row[j] = u(i, j);
      total += family.score_psi(row, alpha);
    }
    return total;
  }

  double slope(double alpha) const {
    const auto& u = pseudo.u();
    std::vector<double> row(static_cast<std::size_t>(u.cols()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      for (Eigen::Index j = 0; j < u.cols(); ++j) row[j] = u(i, j);
      total += family.score_dalpha(row, alpha);
    }
    return total;
  }
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  bool valid = false;
};

// Scans the score over tau-spaced landmarks and returns the sign-change
// interval nearest to alpha0.
Bracket scan_for_bracket(const ScoreSums& sums, const CopulaFamily& family,
                         double alpha0) {
  const auto [tlo, thi] = init_tau_range(family);
  constexpr int kPoints = 49;
  std::vector<double> alphas;
  std::vector<double> values;
  for (int k = 0; k < kPoints; ++k) {
    const double tau = tlo + (thi - tlo) * k / (kPoints - 1.0);
    if (family.excludes_zero() && std::fabs(tau) < 0.005) continue;
    const double a = family.tau_to_alpha(tau);
    double f;
    try {
      f = sums.score(a);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(f)) continue;
    alphas.push_back(a);
    values.push_back(f);
  }
  Bracket best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
    if ((values[k] > 0.0) == (values[k + 1] > 0.0)) continue;
    const double mid = 0.5 * (alphas[k] + alphas[k + 1]);
    const double dist = std::fabs(mid - alpha0);
    if (dist < best_dist) {
      best_dist = dist;
      best = {alphas[k], alphas[k + 1], true};
    }
  }
  return best;
}

struct RootResult {
  double alpha = 0.0;
  double score = 0.0;
  int iterations = 0;
};

RootResult solve_score_root(const ScoreSums& sums, const CopulaFamily& family,
                            double alpha0) {
  const double tol =
      kScoreTolPerPoint * static_cast<double>(sums.pseudo.n());
  double a = alpha0;
  std::optional<double> pos_at, neg_at;  // score > 0 / score < 0
  bool scanned = false;

  auto have_bracket = [&] { return pos_at && neg_at; };
  auto bracket_lo = [&] { return std::min(*pos_at, *neg_at); };
  auto bracket_hi = [&] { return std::max(*pos_at, *neg_at); };

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    double f;
    bool f_ok = true;
    try {
      f = sums.score(a);
      f_ok = std::isfinite(f);
    } catch (const Error&) {
      f_ok = false;
    }
    if (f_ok) {
      if (std::fabs(f) < tol) return {a, f, iter};
      (f > 0.0 ? pos_at : neg_at) = a;
    }

    double cand = std::numeric_limits<double>::quiet_NaN();
    if (f_ok) {
      double df = 0.0;
      try {
        df = sums.slope(a);
      } catch (const Error&) {
        df = 0.0;
      }
      if (std::isfinite(df) && df != 0.0) cand = a - f / df;
    }
    bool ok = std::isfinite(cand) && family.in_domain(cand);
    if (ok && have_bracket()) {
      ok = cand > bracket_lo() && cand < bracket_hi();
    }
    if (!ok) {
      if (!have_bracket()) {
        if (scanned) {
          raise(Errc::no_bracket_found,
                "score has no sign change over the scanned parameter range");
        }
        scanned = true;
        const Bracket b = scan_for_bracket(sums, family, alpha0);
        if (!b.valid) {
          raise(Errc::no_bracket_found,
                "score has no sign change over the scanned parameter range");
        }
        // Seed the bracket endpoints with their known signs.
        const double flo = sums.score(b.lo);
        (flo > 0.0 ? pos_at : neg_at) = b.lo;
        (flo > 0.0 ? neg_at : pos_at) = b.hi;
      }
      cand = 0.5 * (bracket_lo() + bracket_hi());
    }
    if (have_bracket() &&
        bracket_hi() - bracket_lo() <
            kParamTol * std::max(1.0, std::fabs(bracket_lo()))) {
      const double mid = 0.5 * (bracket_lo() + bracket_hi());
      const double fm = sums.score(mid);
      if (std::fabs(fm) < tol) return {mid, fm, iter};
      raise(Errc::max_iterations,
            "bracket collapsed to parameter tolerance with |score| = " +
                std::to_string(std::fabs(fm)) + " > " + std::to_string(tol));
    }
    a = cand;
  }
  raise(Errc::max_iterations, "no convergence after " +
                                  std::to_string(kMaxIterations) +
                                  " iterations");
}

double tau_derivative(const CopulaFamily& family, double alpha) {
  double h = 1e-6 * std::max(1.0, std::fabs(alpha));
  const auto [lo, hi] = family.parameter_domain();
  if (std::isfinite(lo)) h = std::min(h, 0.5 * (alpha - lo));
  if (std::isfinite(hi)) h = std::min(h, 0.5 * (hi - alpha));
  return (family.alpha_to_tau(alpha + h) - family.alpha_to_tau(alpha - h)) /
         (2.0 * h);
}

void check_family_dim(const PseudoSample& pseudo, const CopulaFamily& family) {
  if (pseudo.d() != family.dim()) {
    raise(Errc::length_mismatch,
          "pseudo sample has " + std::to_string(pseudo.d()) +
              " columns, family is " + std::to_string(family.dim()) +
              "-dimensional");
  }
}

}  // namespace

double TrimPolicy::delta_n(Eigen::Index n) const {
  if (!(D > 0.0)) {
    raise(Errc::invalid_trim_policy, "D must be positive, got " +
                                         std::to_string(D));
  }
  if (!(lambda >= 1.0)) {
    raise(Errc::invalid_trim_policy,
          "lambda must be >= 1, got " + std::to_string(lambda));
  }
  if (n < 1) raise(Errc::invalid_trim_policy, "n must be positive");
  const double delta =
      D * std::pow(static_cast<double>(n), -1.0 / lambda);
  if (!(delta > 0.0 && delta < 0.5)) {
    raise(Errc::invalid_trim_policy,
          "delta_n = " + std::to_string(delta) +
              " must lie in (0, 0.5); trimming would drop everything");
  }
  return delta;
}

EstimateReport estimate_tau_inversion(const PseudoSample& pseudo,
                                      const CopulaFamily& family) {
  check_family_dim(pseudo, family);
  const double tau = mean_pairwise_tau(pseudo);
  const double alpha = family.tau_to_alpha(tau);

  EstimateReport report;
  report.estimator = EstimatorTag::tau_inversion;
  report.alpha_hat = alpha;
  report.tau_hat = family.alpha_to_tau(alpha);
  report.iterations = 0;
  report.converged = true;
  report.n_used = pseudo.n();
  report.score_at_root = 0.0;
  return report;
}

EstimateReport estimate_mple(const PseudoSample& pseudo,
                             const CopulaFamily& family,
                             std::optional<double> init) {
  check_family_dim(pseudo, family);
  double alpha0;
  if (init) {
    if (!family.in_domain(*init)) {
      raise(Errc::parameter_out_of_domain,
            "initializer " + std::to_string(*init) + " outside the domain");
    }
    alpha0 = *init;
  } else {
    alpha0 = initial_alpha(pseudo, family);
  }

  const ScoreSums sums{pseudo, family};
  const RootResult root = solve_score_root(sums, family, alpha0);

  EstimateReport report;
  report.estimator = EstimatorTag::mple;
  report.alpha_hat = root.alpha;
  report.tau_hat = family.alpha_to_tau(root.alpha);
  report.iterations = root.iterations;
  report.converged = true;
  report.n_used = pseudo.n();
  report.score_at_root = root.score;
  return report;
}

EstimateReport estimate_mple_trimmed(const PseudoSample& pseudo,
                                     const CopulaFamily& family,
                                     const TrimPolicy& policy) {
  check_family_dim(pseudo, family);
  const auto& u = pseudo.u();
  const double delta = policy.delta_n(pseudo.n());

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    bool inside = true;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      if (u(i, j) < delta || u(i, j) > 1.0 - delta) {
        inside = false;
        break;
      }
    }
    if (inside) keep.push_back(i);
  }
  if (keep.size() < 2) {
    raise(Errc::all_points_trimmed,
          "trimming at delta_n = " + std::to_string(delta) + " keeps " +
              std::to_string(keep.size()) + " of " +
              std::to_string(pseudo.n()) + " rows");
  }

  Eigen::MatrixXd kept(static_cast<Eigen::Index>(keep.size()), u.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    kept.row(static_cast<Eigen::Index>(r)) = u.row(keep[r]);
  }
  EstimateReport report = estimate_mple(PseudoSample(std::move(kept)), family);
  report.estimator = EstimatorTag::mple_trimmed;
  return report;
}

SandwichResult sandwich_covariance(const PseudoSample& pseudo,
                                   const CopulaFamily& family,
                                   double alpha_hat) {
  check_family_dim(pseudo, family);
  if (!family.in_domain(alpha_hat)) {
    raise(Errc::parameter_out_of_domain,
          "alpha " + std::to_string(alpha_hat) + " outside the domain");
  }
  const auto& u = pseudo.u();
  const auto n = u.rows();
  const auto d = u.cols();
  const double dn = static_cast<double>(n);

  std::vector<double> row(static_cast<std::size_t>(d));
  Eigen::VectorXd psi(n);
  double slope_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) row[j] = u(i, j);
    psi[i] = family.score_psi(row, alpha_hat);
    slope_sum += family.score_dalpha(row, alpha_hat);
  }
  const double fisher = -slope_sum / dn;
  if (!std::isfinite(fisher) || fisher <= 0.0) {
    raise(Errc::singular_information,
          "observed information " + std::to_string(fisher) +
              " is not positive");
  }

  // Rank-transform correction: for margin j and point i add
  //   (1/n) sum_m [1{u_ji <= u_jm} - u_jm] g_m,  g_m = d psi / du_j (u_m).
  // Sorting the column once turns the indicator sum into a suffix sum.
  Eigen::VectorXd psi_tilde = psi;
  std::vector<double> g(static_cast<std::size_t>(n));
  std::vector<double> sorted_vals(static_cast<std::size_t>(n));
  std::vector<double> suffix(static_cast<std::size_t>(n) + 1);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    double k_mean = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      for (Eigen::Index c = 0; c < d; ++c) row[c] = u(m, c);
      g[static_cast<std::size_t>(m)] =
          family.score_partial_u(row, alpha_hat, static_cast<int>(j) + 1);
      k_mean += u(m, j) * g[static_cast<std::size_t>(m)];
    }
    k_mean /= dn;

    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return u(static_cast<Eigen::Index>(a), j) <
             u(static_cast<Eigen::Index>(b), j);
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      sorted_vals[r] = u(static_cast<Eigen::Index>(order[r]), j);
    }
    suffix[order.size()] = 0.0;
    for (std::size_t r = order.size(); r-- > 0;) {
      suffix[r] = suffix[r + 1] + g[order[r]];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(sorted_vals.begin(), sorted_vals.end(), u(i, j)) -
          sorted_vals.begin());
      psi_tilde[i] += suffix[pos] / dn - k_mean;
    }
  }

  const double mean = psi_tilde.mean();
  const double var = (psi_tilde.array() - mean).square().sum() / dn;
  if (!std::isfinite(var)) {
    raise(Errc::singular_information, "score variance is not finite");
  }

  SandwichResult result;
  result.sigma2 = var / (fisher * fisher);
  result.fisher = fisher;
  result.se_alpha = std::sqrt(result.sigma2 / dn);
  result.se_tau =
      result.se_alpha * std::fabs(tau_derivative(family, alpha_hat));
  return result;
}

PipelineResult fit_pipeline(const ObservationSet& data,
                            const std::vector<MarginalSpec>& specs,
                            const CopulaFamily& family, EstimatorTag estimator,
                            std::optional<TrimPolicy> policy) {
  if (static_cast<Eigen::Index>(specs.size()) != data.d()) {
    raise(Errc::length_mismatch,
          "got " + std::to_string(specs.size()) + " marginal specs for " +
              std::to_string(data.d()) + " response columns");
  }
  if (family.dim() != data.d()) {
    raise(Errc::length_mismatch,
          "family dimension " + std::to_string(family.dim()) +
              " does not match d = " + std::to_string(data.d()));
  }
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].margin_index != static_cast<int>(k) + 1) {
      raise(Errc::invalid_argument,
            "marginal specs must be ordered; spec " + std::to_string(k + 1) +
                " has margin_index " + std::to_string(specs[k].margin_index));
    }
  }

  PipelineResult result;
  Eigen::MatrixXd residuals(data.n(), data.d());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    MarginalFit fit = fit_marginal(data, specs[k]);
    residuals.col(static_cast<Eigen::Index>(k)) = fit.residuals;
    result.fits.push_back(std::move(fit));
  }

  const PseudoSample pseudo = pseudo_observations(residuals);
  switch (estimator) {
    case EstimatorTag::tau_inversion:
      result.report = estimate_tau_inversion(pseudo, family);
      return result;
    case EstimatorTag::mple:
      result.report = estimate_mple(pseudo, family);
      break;
    case EstimatorTag::mple_trimmed:
      result.report =
          estimate_mple_trimmed(pseudo, family, policy.value_or(TrimPolicy{}));
      break;
  }

  const SandwichResult se =
      sandwich_covariance(pseudo, family, result.report.alpha_hat);
  result.report.std_error_alpha = se.se_alpha;
  result.report.std_error_tau = se.se_tau;
  return result;
}

}  // namespace rescop
