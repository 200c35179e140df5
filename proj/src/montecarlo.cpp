#include "rescop/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "rescop/dataset.hpp"
#include "rescop/errors.hpp"
#include "rescop/ranks.hpp"

namespace rescop {

namespace {

using ordered_json = nlohmann::ordered_json;

FamilyTag family_from_name(const std::string& name) {
  if (name == "clayton") return FamilyTag::clayton;
  if (name == "frank") return FamilyTag::frank;
  if (name == "gumbel") return FamilyTag::gumbel;
  if (name == "gaussian") return FamilyTag::gaussian;
  if (name == "student_t5") return FamilyTag::student_t5;
  raise(Errc::invalid_scenario, "unknown family '" + name + "'");
}

MarginsTag margins_from_name(const std::string& name) {
  if (name == "NE") return MarginsTag::NE;
  if (name == "NU") return MarginsTag::NU;
  if (name == "tt") return MarginsTag::tt;
  if (name == "NNE") return MarginsTag::NNE;
  if (name == "NNU") return MarginsTag::NNU;
  raise(Errc::invalid_scenario, "unknown margins tag '" + name + "'");
}

SimEstimator estimator_from_name(const std::string& name) {
  if (name == "ik_oracle") return SimEstimator::ik_oracle;
  if (name == "ik") return SimEstimator::ik;
  if (name == "pl_oracle") return SimEstimator::pl_oracle;
  if (name == "pl") return SimEstimator::pl;
  if (name == "pl_star") return SimEstimator::pl_star;
  raise(Errc::invalid_scenario, "unknown estimator '" + name + "'");
}

bool wants(const Scenario& s, SimEstimator e) {
  return std::find(s.estimators.begin(), s.estimators.end(), e) !=
         s.estimators.end();
}

std::vector<double> default_intercepts(int d) {
  return d == 2 ? std::vector<double>{1.0, -1.0}
                : std::vector<double>{1.0, -1.0, 1.0};
}

std::vector<double> default_slopes(int d) {
  return d == 2 ? std::vector<double>{1.0, 2.0}
                : std::vector<double>{1.0, 2.0, -1.0};
}

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

double interpolated_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m == 0) return 0.0;
  if (m % 2 == 1) return values[m / 2];
  return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

const char* margins_name(MarginsTag tag) {
  switch (tag) {
    case MarginsTag::NE: return "NE";
    case MarginsTag::NU: return "NU";
    case MarginsTag::tt: return "tt";
    case MarginsTag::NNE: return "NNE";
    case MarginsTag::NNU: return "NNU";
  }
  return "unknown";
}

const char* sim_estimator_name(SimEstimator e) {
  switch (e) {
    case SimEstimator::ik_oracle: return "ik_oracle";
    case SimEstimator::ik: return "ik";
    case SimEstimator::pl_oracle: return "pl_oracle";
    case SimEstimator::pl: return "pl";
    case SimEstimator::pl_star: return "pl_star";
  }
  return "unknown";
}

int margins_dim(MarginsTag tag) {
  switch (tag) {
    case MarginsTag::NE:
    case MarginsTag::NU:
    case MarginsTag::tt:
      return 2;
    case MarginsTag::NNE:
    case MarginsTag::NNU:
      return 3;
  }
  return 2;
}

std::vector<ErrorLaw> margins_laws(MarginsTag tag) {
  switch (tag) {
    case MarginsTag::NE:
      return {ErrorLaw::normal(), ErrorLaw::exponential()};
    case MarginsTag::NU:
      return {ErrorLaw::normal(), ErrorLaw::uniform()};
    case MarginsTag::tt:
      return {ErrorLaw::student_t(5.0), ErrorLaw::student_t(5.0)};
    case MarginsTag::NNE:
      return {ErrorLaw::normal(), ErrorLaw::normal(), ErrorLaw::exponential()};
    case MarginsTag::NNU:
      return {ErrorLaw::normal(), ErrorLaw::normal(), ErrorLaw::uniform()};
  }
  return {};
}

void Scenario::validate() const {
  if (n < 2) raise(Errc::invalid_scenario, "n must be >= 2");
  if (reps < 1) raise(Errc::invalid_scenario, "reps must be >= 1");
  if (threads < 0) raise(Errc::invalid_scenario, "threads must be >= 0");
  if (estimators.empty()) {
    raise(Errc::invalid_scenario, "at least one estimator is required");
  }
  for (std::size_t a = 0; a < estimators.size(); ++a) {
    for (std::size_t b = a + 1; b < estimators.size(); ++b) {
      if (estimators[a] == estimators[b]) {
        raise(Errc::invalid_scenario,
              std::string("estimator '") + sim_estimator_name(estimators[a]) +
                  "' listed twice");
      }
    }
  }
  const int d = dim();
  if (!intercepts.empty() && static_cast<int>(intercepts.size()) != d) {
    raise(Errc::invalid_scenario,
          "intercepts must have one entry per margin");
  }
  if (!slopes.empty() && static_cast<int>(slopes.size()) != d) {
    raise(Errc::invalid_scenario, "slopes must have one entry per margin");
  }
  const CopulaFamily fam(family, d);
  try {
    fam.tau_to_alpha(tau_true);
  } catch (const Error& e) {
    raise(Errc::invalid_scenario, e.what());
  }
  if (wants(*this, SimEstimator::pl_star)) {
    trim.delta_n(n);  // validates the policy for this n
  }
}

std::string Scenario::to_json() const {
  ordered_json j;
  j["family"] = CopulaFamily(family, dim()).name();
  j["tau_true"] = tau_true;
  j["margins"] = margins_name(margins);
  j["n"] = n;
  j["reps"] = reps;
  j["intercepts"] = intercepts.empty() ? default_intercepts(dim()) : intercepts;
  j["slopes"] = slopes.empty() ? default_slopes(dim()) : slopes;
  j["covariate_law"] =
      covariate_law == CovariateLaw::normal ? "normal" : "poisson";
  j["seed"] = seed;
  ordered_json names = ordered_json::array();
  for (auto e : estimators) names.push_back(sim_estimator_name(e));
  j["estimators"] = names;
  j["trim"] = {{"D", trim.D}, {"lambda", trim.lambda}};
  j["threads"] = threads;
  return j.dump(2);
}

Scenario Scenario::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    raise(Errc::invalid_scenario, std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object()) raise(Errc::invalid_scenario, "scenario must be an object");

  static const char* allowed[] = {"family",     "tau_true", "margins",
                                  "n",          "reps",     "intercepts",
                                  "slopes",     "covariate_law", "seed",
                                  "estimators", "trim",     "threads"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known |= (it.key() == k);
    if (!known) {
      raise(Errc::invalid_scenario, "unknown key '" + it.key() + "'");
    }
  }

  auto need = [&](const char* key) -> const ordered_json& {
    auto it = j.find(key);
    if (it == j.end()) {
      raise(Errc::invalid_scenario, std::string("missing key '") + key + "'");
    }
    return *it;
  };

  Scenario s;
  try {
    s.family = family_from_name(need("family").get<std::string>());
    s.tau_true = need("tau_true").get<double>();
    s.margins = margins_from_name(need("margins").get<std::string>());
    s.n = need("n").get<int>();
    s.reps = need("reps").get<int>();
    if (j.contains("intercepts")) {
      s.intercepts = j["intercepts"].get<std::vector<double>>();
    }
    if (j.contains("slopes")) {
      s.slopes = j["slopes"].get<std::vector<double>>();
    }
    if (j.contains("covariate_law")) {
      const auto name = j["covariate_law"].get<std::string>();
      if (name == "normal") {
        s.covariate_law = CovariateLaw::normal;
      } else if (name == "poisson") {
        s.covariate_law = CovariateLaw::poisson;
      } else {
        raise(Errc::invalid_scenario, "unknown covariate_law '" + name + "'");
      }
    }
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("estimators")) {
      s.estimators.clear();
      for (const auto& e : j["estimators"]) {
        s.estimators.push_back(estimator_from_name(e.get<std::string>()));
      }
    }
    if (j.contains("trim")) {
      const auto& t = j["trim"];
      if (!t.is_object()) raise(Errc::invalid_scenario, "trim must be an object");
      for (auto it = t.begin(); it != t.end(); ++it) {
        if (it.key() != "D" && it.key() != "lambda") {
          raise(Errc::invalid_scenario, "unknown trim key '" + it.key() + "'");
        }
      }
      if (t.contains("D")) s.trim.D = t["D"].get<double>();
      if (t.contains("lambda")) s.trim.lambda = t["lambda"].get<double>();
    }
    if (j.contains("threads")) s.threads = j["threads"].get<int>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::invalid_scenario, std::string("bad field: ") + e.what());
  }
  s.validate();
  return s;
}

RepEstimates run_replication(const Scenario& s, int rep_index) {
  const int d = s.dim();
  const CopulaFamily family(s.family, d);
  const double alpha_true = family.tau_to_alpha(s.tau_true);
  const auto laws = margins_laws(s.margins);
  const auto intercepts =
      s.intercepts.empty() ? default_intercepts(d) : s.intercepts;
  const auto slopes = s.slopes.empty() ? default_slopes(d) : s.slopes;

  RngStream rng =
      RngStream::substream(s.seed, static_cast<std::uint64_t>(rep_index));

  // Draw order is fixed: covariates first, then the copula sample.  The
  // error quantile transform is deterministic, so the latent uniforms (and
  // with them everything the oracle estimators see, rank-wise) do not
  // depend on which margins are in play.
  Eigen::MatrixXd x(s.n, 1);
  for (int i = 0; i < s.n; ++i) {
    x(i, 0) = s.covariate_law == CovariateLaw::normal
                  ? rng.normal()
                  : static_cast<double>(rng.poisson(5.0));
  }
  const Eigen::MatrixXd u = family.sample(alpha_true, s.n, rng);

  Eigen::MatrixXd eps(s.n, d);
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < d; ++j) {
      eps(i, j) = laws[static_cast<std::size_t>(j)].quantile(u(i, j));
    }
  }

  RepEstimates out{};
  auto attempt = [&](SimEstimator which, auto&& fn) {
    if (!wants(s, which)) return;
    try {
      out[static_cast<std::size_t>(which)] = fn();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
    }
  };

  if (wants(s, SimEstimator::ik_oracle) || wants(s, SimEstimator::pl_oracle)) {
    const PseudoSample oracle = pseudo_observations(eps);
    attempt(SimEstimator::ik_oracle, [&] {
      return RepOutcome{estimate_tau_inversion(oracle, family).tau_hat, {}};
    });
    attempt(SimEstimator::pl_oracle, [&] {
      return RepOutcome{estimate_mple(oracle, family).tau_hat, {}};
    });
  }

  const bool residual_side = wants(s, SimEstimator::ik) ||
                             wants(s, SimEstimator::pl) ||
                             wants(s, SimEstimator::pl_star);
  if (residual_side) {
    Eigen::MatrixXd y(s.n, d);
    for (int j = 0; j < d; ++j) {
      y.col(j) = intercepts[static_cast<std::size_t>(j)] +
                 (slopes[static_cast<std::size_t>(j)] * x.col(0).array()) +
                 eps.col(j).array();
    }
    const ObservationSet data(std::move(y), x);
    std::vector<MarginalSpec> specs;
    for (int j = 1; j <= d; ++j) {
      specs.push_back(MarginalSpec{j, Transformation::identity,
                                   ScaleDesign::constant_one});
    }
    attempt(SimEstimator::ik, [&] {
      const auto r =
          fit_pipeline(data, specs, family, EstimatorTag::tau_inversion);
      return RepOutcome{r.report.tau_hat, {}};
    });
    attempt(SimEstimator::pl, [&] {
      const auto r = fit_pipeline(data, specs, family, EstimatorTag::mple);
      return RepOutcome{r.report.tau_hat, r.report.std_error_tau};
    });
    attempt(SimEstimator::pl_star, [&] {
      const auto r = fit_pipeline(data, specs, family,
                                  EstimatorTag::mple_trimmed, s.trim);
      return RepOutcome{r.report.tau_hat, r.report.std_error_tau};
    });
  }
  return out;
}

ScenarioResult run_scenario(const Scenario& s) {
  s.validate();

  std::vector<RepEstimates> results(static_cast<std::size_t>(s.reps));
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const int threads =
      std::min(s.reps, s.threads > 0 ? s.threads : static_cast<int>(hw));

  if (threads <= 1) {
    for (int r = 0; r < s.reps; ++r) results[static_cast<std::size_t>(r)] =
        run_replication(s, r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= s.reps) break;
        try {
          results[static_cast<std::size_t>(r)] = run_replication(s, r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          break;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ScenarioResult result;
  std::string unstable;
  constexpr SimEstimator canonical[] = {
      SimEstimator::ik_oracle, SimEstimator::ik, SimEstimator::pl_oracle,
      SimEstimator::pl, SimEstimator::pl_star};
  for (SimEstimator e : canonical) {
    if (!wants(s, e)) continue;
    const auto idx = static_cast<std::size_t>(e);
    std::vector<double> taus;
    std::vector<double> ses;
    taus.reserve(results.size());
    for (const auto& rep : results) {
      const auto& outcome = rep[idx];
      if (!outcome) continue;
      taus.push_back(outcome->tau_hat);
      if (outcome->se_tau) ses.push_back(*outcome->se_tau);
    }
    const int failed = s.reps - static_cast<int>(taus.size());
    result.failures[idx] = failed;
    if (static_cast<double>(taus.size()) <
        0.95 * static_cast<double>(s.reps)) {
      unstable += std::string(unstable.empty() ? "" : "; ") +
                  sim_estimator_name(e) + " failed " + std::to_string(failed) +
                  " of " + std::to_string(s.reps) + " replications";
      continue;
    }

    double mean = 0.0;
    for (double t : taus) mean += t;
    mean /= static_cast<double>(taus.size());
    double ss = 0.0, mse = 0.0;
    for (double t : taus) {
      ss += (t - mean) * (t - mean);
      mse += (t - s.tau_true) * (t - s.tau_true);
    }
    const auto m = static_cast<double>(taus.size());
    MetricRow row;
    row.estimator = e;
    row.bias_x100 = 100.0 * (mean - s.tau_true);
    row.sd_x100 = taus.size() > 1 ? 100.0 * std::sqrt(ss / (m - 1.0)) : 0.0;
    row.rmse_x100 = 100.0 * std::sqrt(mse / m);
    result.rows.push_back(row);
    if (!ses.empty()) result.median_se_tau[idx] = interpolated_median(ses);
  }
  if (!unstable.empty()) {
    raise(Errc::scenario_unstable, unstable);
  }
  return result;
}

std::string render_table(const std::vector<MetricRow>& rows, TableFormat fmt) {
  if (rows.empty()) raise(Errc::empty_input, "no metric rows to render");
  std::string out;
  if (fmt == TableFormat::csv) {
    out = "estimator,bias_x100,sd_x100,rmse_x100\n";
    for (const auto& r : rows) {
      out += sim_estimator_name(r.estimator);
      out += ',' + format_cell(r.bias_x100) + ',' + format_cell(r.sd_x100) +
             ',' + format_cell(r.rmse_x100) + '\n';
    }
    return out;
  }
  out = "| estimator | bias x100 | sd x100 | rmse x100 |\n";
  out += "|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out += std::string("| ") + sim_estimator_name(r.estimator) + " | " +
           format_cell(r.bias_x100) + " | " + format_cell(r.sd_x100) + " | " +
           format_cell(r.rmse_x100) + " |\n";
  }
  return out;
}

}  // namespace rescop
