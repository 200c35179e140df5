#pragma once

#include <optional>
#include <vector>

#include "rescop/copulas.hpp"
#include "rescop/dataset.hpp"
#include "rescop/marginals.hpp"
#include "rescop/ranks.hpp"

namespace rescop {

enum class EstimatorTag { tau_inversion, mple, mple_trimmed };

struct EstimateReport {
  EstimatorTag estimator = EstimatorTag::mple;
  double alpha_hat = 0.0;
  double tau_hat = 0.0;
  std::optional<double> std_error_alpha;
  std::optional<double> std_error_tau;
  int iterations = 0;
  bool converged = false;
  Eigen::Index n_used = 0;
  double score_at_root = 0.0;  // signed sum of per-point scores at alpha_hat
};

// Rows are kept only when every coordinate lies inside
// [delta_n, 1 - delta_n] with delta_n = D * n^(-1/lambda).
struct TrimPolicy {
  double D = 0.25;
  double lambda = 1.9;

  double delta_n(Eigen::Index n) const;
};

// Kendall-tau inversion.  For d > 2 the pairwise taus are averaged before
// inverting (the families here are exchangeable).
EstimateReport estimate_tau_inversion(const PseudoSample& pseudo,
                                      const CopulaFamily& family);

// Maximum pseudo-likelihood: root of sum_i psi(u_i; alpha) via safeguarded
// Newton.  Starts from the tau-inversion value unless `init` is given; with
// several roots the one nearest the initializer wins.
EstimateReport estimate_mple(const PseudoSample& pseudo,
                             const CopulaFamily& family,
                             std::optional<double> init = std::nullopt);

EstimateReport estimate_mple_trimmed(const PseudoSample& pseudo,
                                     const CopulaFamily& family,
                                     const TrimPolicy& policy);

struct SandwichResult {
  double sigma2 = 0.0;     // asymptotic variance of sqrt(n)(alpha_hat - alpha)
  double fisher = 0.0;     // observed information (minus mean score slope)
  double se_alpha = 0.0;
  double se_tau = 0.0;
};

// Plug-in sandwich covariance that accounts for the rank transform: each
// score is augmented with the empirical projection term
//   (1/n) sum_m [1{u_ji <= u_jm} - u_jm] * d(psi)/du_j (u_m)
// summed over margins, then variance / information^2 as usual.
SandwichResult sandwich_covariance(const PseudoSample& pseudo,
                                   const CopulaFamily& family,
                                   double alpha_hat);

struct PipelineResult {
  EstimateReport report;
  std::vector<MarginalFit> fits;
};

// Margins-then-copula pipeline: fit every margin, rank-transform the
// residuals, estimate the dependence parameter, and (for the likelihood
// estimators) attach sandwich standard errors.
PipelineResult fit_pipeline(const ObservationSet& data,
                            const std::vector<MarginalSpec>& specs,
                            const CopulaFamily& family, EstimatorTag estimator,
                            std::optional<TrimPolicy> policy = std::nullopt);

}  // namespace rescop
