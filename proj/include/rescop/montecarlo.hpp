#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rescop/copulas.hpp"
#include "rescop/estimate.hpp"
#include "rescop/marginals.hpp"

namespace rescop {

// Margin bundles used by the simulation studies: normal+exponential,
// normal+uniform and t5+t5 in two dimensions, plus the three-dimensional
// variants with an extra normal margin.
enum class MarginsTag { NE, NU, tt, NNE, NNU };

enum class CovariateLaw { normal, poisson };

// Estimators compared per replication.  The *_oracle variants see the true
// errors rather than the fitted residuals; pl_star is the trimmed
// likelihood estimator.
enum class SimEstimator { ik_oracle, ik, pl_oracle, pl, pl_star };
constexpr int kSimEstimatorCount = 5;

const char* margins_name(MarginsTag tag);
const char* sim_estimator_name(SimEstimator e);
int margins_dim(MarginsTag tag);
std::vector<ErrorLaw> margins_laws(MarginsTag tag);

struct Scenario {
  FamilyTag family = FamilyTag::clayton;
  double tau_true = 0.5;
  MarginsTag margins = MarginsTag::NE;
  int n = 1000;
  int reps = 100;
  std::vector<double> intercepts;  // default 1, -1 (, 1)
  std::vector<double> slopes;      // default 1,  2 (, -1)
  CovariateLaw covariate_law = CovariateLaw::normal;
  std::uint64_t seed = 1;
  std::vector<SimEstimator> estimators = {SimEstimator::pl};
  TrimPolicy trim;
  int threads = 0;  // 0 = hardware concurrency

  int dim() const { return margins_dim(margins); }
  void validate() const;

  std::string to_json() const;
  static Scenario from_json_text(const std::string& text);
};

struct RepOutcome {
  double tau_hat = 0.0;
  std::optional<double> se_tau;
};

// One replication: simulate, fit margins, estimate with every requested
// estimator.  Failed estimators come back empty.
using RepEstimates = std::array<std::optional<RepOutcome>, kSimEstimatorCount>;
RepEstimates run_replication(const Scenario& scenario, int rep_index);

struct MetricRow {
  SimEstimator estimator = SimEstimator::pl;
  double bias_x100 = 0.0;
  double sd_x100 = 0.0;    // reps-1 denominator
  double rmse_x100 = 0.0;  // sqrt of mean squared deviation from tau_true
};

struct ScenarioResult {
  std::vector<MetricRow> rows;  // canonical estimator order
  std::array<int, kSimEstimatorCount> failures{};
  std::array<std::optional<double>, kSimEstimatorCount> median_se_tau;
};

// Runs every replication (in parallel when threads allows), aggregates in
// replication order, and refuses to report when more than 5% of the
// replications failed for a requested estimator.
ScenarioResult run_scenario(const Scenario& scenario);

enum class TableFormat { csv, markdown };

std::string render_table(const std::vector<MetricRow>& rows, TableFormat fmt);

}  // namespace rescop
