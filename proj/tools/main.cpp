#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rescop/dataset.hpp"
#include "rescop/diagnose.hpp"
#include "rescop/errors.hpp"
#include "rescop/estimate.hpp"
#include "rescop/montecarlo.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;
using namespace rescop;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& flags,
                const std::string& default_format) {
  flags.format = default_format;
  cmd->add_option("--seed", flags.seed, "RNG seed (default: system entropy)");
  cmd->add_option("--threads", flags.threads, "Worker threads")
      ->check(CLI::Range(1, 4096));
  cmd->add_option("--out", flags.out, "Write output to this file");
  cmd->add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"csv", "markdown", "json"}));
}

std::uint64_t resolve_seed(const CommonFlags& flags) {
  if (flags.seed) return *flags.seed;
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << seed << "\n";
  return seed;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) raise(Errc::io_failure, "cannot open '" + out_path + "'");
  file << text;
  if (!file) raise(Errc::io_failure, "short write to '" + out_path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) raise(Errc::io_failure, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* cli_estimator_name(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::tau_inversion: return "ik";
    case EstimatorTag::mple: return "pl";
    case EstimatorTag::mple_trimmed: return "pl_star";
  }
  return "unknown";
}

const char* transformation_name(Transformation t) {
  return t == Transformation::identity ? "identity" : "log";
}

const char* scale_design_name(ScaleDesign s) {
  return s == ScaleDesign::constant_one ? "one" : "linear";
}

ErrorLaw law_from_name(const std::string& name) {
  if (name == "normal") return ErrorLaw::normal();
  if (name == "exponential") return ErrorLaw::exponential();
  if (name == "uniform") return ErrorLaw::uniform();
  if (name == "t5" || name == "student_t5") return ErrorLaw::student_t(5.0);
  raise(Errc::invalid_argument, "unknown margin law '" + name + "'");
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
  CommonFlags common;
  std::string data_path;
  int d = 2;
  int q = 1;
  std::string family;
  std::string estimator = "pl";
  double trim_d = 0.25;
  double trim_lambda = 1.9;
  std::vector<std::string> transforms;
  std::vector<std::string> scales;
  bool jitter = false;
};

std::string render_fit_json(const PipelineResult& result,
                            const std::string& family) {
  const auto& r = result.report;
  ordered_json j;
  j["estimator"] = cli_estimator_name(r.estimator);
  j["family"] = family;
  j["alpha_hat"] = r.alpha_hat;
  j["tau_hat"] = r.tau_hat;
  j["std_error_alpha"] =
      r.std_error_alpha ? ordered_json(*r.std_error_alpha) : ordered_json();
  j["std_error_tau"] =
      r.std_error_tau ? ordered_json(*r.std_error_tau) : ordered_json();
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["n_used"] = static_cast<long long>(r.n_used);
  j["score_at_root"] = r.score_at_root;
  ordered_json margins = ordered_json::array();
  for (const auto& fit : result.fits) {
    ordered_json m;
    m["margin_index"] = fit.spec.margin_index;
    m["transformation"] = transformation_name(fit.spec.transformation);
    m["scale_design"] = scale_design_name(fit.spec.scale_design);
    std::vector<double> theta(fit.theta_hat.begin(), fit.theta_hat.end());
    m["theta_hat"] = theta;
    margins.push_back(std::move(m));
  }
  j["margins"] = std::move(margins);
  return j.dump(2) + "\n";
}

std::string render_fit_table(const PipelineResult& result,
                             const std::string& family, bool markdown) {
  const auto& r = result.report;
  const std::string se_a =
      r.std_error_alpha ? fmt_double(*r.std_error_alpha) : std::string();
  const std::string se_t =
      r.std_error_tau ? fmt_double(*r.std_error_tau) : std::string();
  if (!markdown) {
    std::string out =
        "estimator,family,alpha_hat,tau_hat,std_error_alpha,std_error_tau,"
        "iterations,converged,n_used\n";
    out += std::string(cli_estimator_name(r.estimator)) + ',' + family + ',' +
           fmt_double(r.alpha_hat) + ',' + fmt_double(r.tau_hat) + ',' + se_a +
           ',' + se_t + ',' + std::to_string(r.iterations) + ',' +
           (r.converged ? "true" : "false") + ',' + std::to_string(r.n_used) +
           '\n';
    return out;
  }
  std::string out = "| field | value |\n|---|---|\n";
  auto row = [&out](const std::string& k, const std::string& v) {
    out += "| " + k + " | " + v + " |\n";
  };
  row("estimator", cli_estimator_name(r.estimator));
  row("family", family);
  row("alpha_hat", fmt_double(r.alpha_hat));
  row("tau_hat", fmt_double(r.tau_hat));
  row("std_error_alpha", se_a.empty() ? "-" : se_a);
  row("std_error_tau", se_t.empty() ? "-" : se_t);
  row("iterations", std::to_string(r.iterations));
  row("converged", r.converged ? "true" : "false");
  row("n_used", std::to_string(r.n_used));
  return out;
}

int cmd_fit(const FitArgs& args) {
  ObservationSet data = load_csv(args.data_path, args.d, args.q);
  if (args.jitter) {
    RngStream rng(resolve_seed(args.common));
    Eigen::MatrixXd y = data.y();
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double scale = 1e-12 * std::max(1.0, std::fabs(y(i, j)));
        y(i, j) += (2.0 * rng.uniform_open01() - 1.0) * scale;
      }
    }
    data = ObservationSet(std::move(y), data.x());
  }

  const CopulaFamily family = CopulaFamily::from_name(args.family, args.d);

  std::vector<MarginalSpec> specs;
  for (int j = 1; j <= args.d; ++j) {
    MarginalSpec spec;
    spec.margin_index = j;
    if (!args.transforms.empty()) {
      if (static_cast<int>(args.transforms.size()) != args.d) {
        raise(Errc::invalid_argument,
              "--transform needs one entry per margin");
      }
      const auto& t = args.transforms[static_cast<std::size_t>(j - 1)];
      if (t == "identity") {
        spec.transformation = Transformation::identity;
      } else if (t == "log") {
        spec.transformation = Transformation::log;
      } else {
        raise(Errc::invalid_argument, "unknown transform '" + t + "'");
      }
    }
    if (!args.scales.empty()) {
      if (static_cast<int>(args.scales.size()) != args.d) {
        raise(Errc::invalid_argument, "--scale needs one entry per margin");
      }
      const auto& s = args.scales[static_cast<std::size_t>(j - 1)];
      if (s == "one") {
        spec.scale_design = ScaleDesign::constant_one;
      } else if (s == "linear") {
        spec.scale_design = ScaleDesign::linear_positive;
      } else {
        raise(Errc::invalid_argument, "unknown scale design '" + s + "'");
      }
    }
    specs.push_back(spec);
  }

  EstimatorTag tag;
  if (args.estimator == "ik") {
    tag = EstimatorTag::tau_inversion;
  } else if (args.estimator == "pl") {
    tag = EstimatorTag::mple;
  } else {
    tag = EstimatorTag::mple_trimmed;
  }
  std::optional<TrimPolicy> policy;
  if (tag == EstimatorTag::mple_trimmed) {
    policy = TrimPolicy{args.trim_d, args.trim_lambda};
  }

  const PipelineResult result = fit_pipeline(data, specs, family, tag, policy);

  std::string text;
  if (args.common.format == "json") {
    text = render_fit_json(result, args.family);
  } else {
    text = render_fit_table(result, args.family,
                            args.common.format == "markdown");
  }
  emit(text, args.common.out);
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  CommonFlags common;
  std::string scenario_path;
  std::string family;
  double tau = 0.5;
  std::string margins;
  int n = 0;
  int reps = 0;
  std::vector<std::string> estimators;
  double trim_d = 0.25;
  double trim_lambda = 1.9;
};

std::string render_scenario_json(const Scenario& s, const ScenarioResult& r) {
  ordered_json j;
  j["scenario"] = ordered_json::parse(s.to_json());
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    const auto idx = static_cast<std::size_t>(row.estimator);
    ordered_json item;
    item["estimator"] = sim_estimator_name(row.estimator);
    item["bias_x100"] = row.bias_x100;
    item["sd_x100"] = row.sd_x100;
    item["rmse_x100"] = row.rmse_x100;
    item["failures"] = r.failures[idx];
    item["median_se_tau"] = r.median_se_tau[idx]
                                ? ordered_json(*r.median_se_tau[idx])
                                : ordered_json();
    rows.push_back(std::move(item));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

int cmd_simulate(const SimulateArgs& args, bool inline_mode) {
  Scenario scenario;
  bool seed_given = args.common.seed.has_value();
  if (!inline_mode) {
    const std::string text = read_file(args.scenario_path);
    scenario = Scenario::from_json_text(text);
    if (!seed_given) {
      seed_given = ordered_json::parse(text).contains("seed");
    }
  } else {
    ordered_json j;
    j["family"] = args.family;
    j["tau_true"] = args.tau;
    j["margins"] = args.margins.empty() ? "NE" : args.margins;
    j["n"] = args.n;
    j["reps"] = args.reps;
    if (!args.estimators.empty()) j["estimators"] = args.estimators;
    j["trim"] = {{"D", args.trim_d}, {"lambda", args.trim_lambda}};
    scenario = Scenario::from_json_text(j.dump());
  }
  if (args.common.seed) {
    scenario.seed = *args.common.seed;
  } else if (!seed_given) {
    scenario.seed = resolve_seed(args.common);
  }
  if (args.common.threads > 0) scenario.threads = args.common.threads;
  scenario.validate();

  const ScenarioResult result = run_scenario(scenario);

  for (int e = 0; e < kSimEstimatorCount; ++e) {
    const auto idx = static_cast<std::size_t>(e);
    if (result.failures[idx] > 0) {
      std::cerr << "note: estimator "
                << sim_estimator_name(static_cast<SimEstimator>(e)) << ": "
                << result.failures[idx] << " of " << scenario.reps
                << " replications failed\n";
    }
  }

  std::string text;
  if (args.common.format == "json") {
    text = render_scenario_json(scenario, result);
  } else {
    text = render_table(result.rows, args.common.format == "markdown"
                                         ? TableFormat::markdown
                                         : TableFormat::csv);
  }
  emit(text, args.common.out);
  return 0;
}

// ---- diagnose -------------------------------------------------------------

struct DiagnoseArgs {
  CommonFlags common;
  std::string family;
  std::vector<std::string> margins;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  std::vector<ErrorLaw> laws;
  for (const auto& name : args.margins) laws.push_back(law_from_name(name));
  const int d = std::max(2, static_cast<int>(laws.size()));
  const CopulaFamily family = CopulaFamily::from_name(args.family, d);
  const Applicability report = check_applicability(family, laws);

  std::string text;
  if (args.common.format == "json") {
    ordered_json j;
    j["family"] = args.family;
    j["verdict"] = theorem_cover_name(report.verdict);
    ordered_json margins = ordered_json::array();
    for (std::size_t k = 0; k < laws.size(); ++k) {
      const auto& b = report.margins[k];
      ordered_json m;
      m["law"] = laws[k].name();
      m["beta_max"] = b.beta_max;
      m["left_exponent"] = b.left_exponent;
      m["right_exponent"] = b.right_exponent;
      m["left_limit"] = b.left_limit;
      m["right_limit"] = b.right_limit;
      m["tail_monotone"] = b.tail_monotone;
      m["continuous_density_violated"] = b.continuous_density_violated;
      margins.push_back(std::move(m));
    }
    j["margins"] = std::move(margins);
    j["reasons"] = report.reasons;
    text = j.dump(2) + "\n";
  } else if (args.common.format == "csv") {
    text = "key,value\n";
    text += "family," + args.family + "\n";
    text += std::string("verdict,") + theorem_cover_name(report.verdict) + "\n";
    for (std::size_t k = 0; k < laws.size(); ++k) {
      const std::string p = "margin" + std::to_string(k + 1) + "_";
      text += p + "law," + laws[k].name() + "\n";
      text += p + "beta_max," + fmt_double(report.margins[k].beta_max) + "\n";
    }
    for (std::size_t k = 0; k < report.reasons.size(); ++k) {
      std::string reason = report.reasons[k];
      for (char& c : reason) {
        if (c == ',') c = ';';
      }
      text += "reason" + std::to_string(k + 1) + "," + reason + "\n";
    }
  } else {
    text = "family: " + args.family + "\n";
    text += std::string("verdict: ") + theorem_cover_name(report.verdict) +
            "\n";
    for (std::size_t k = 0; k < laws.size(); ++k) {
      const auto& b = report.margins[k];
      char line[160];
      std::snprintf(line, sizeof line,
                    "margin %zu: %s  beta_max=%.3f  exponents=(%.3f, %.3f)\n",
                    k + 1, laws[k].name().c_str(), b.beta_max, b.left_exponent,
                    b.right_exponent);
      text += line;
    }
    if (!report.reasons.empty()) {
      text += "reasons:\n";
      for (const auto& reason : report.reasons) {
        text += "  - " + reason + "\n";
      }
    }
  }
  emit(text, args.common.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Copula dependence estimation from regression residuals: fit real "
      "data, run simulation scenarios, check estimator regularity."};
  app.require_subcommand(1);

  FitArgs fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Estimate a copula parameter from a CSV");
  fit_cmd->add_option("--data", fit.data_path, "CSV with y1..yd and x1..xq")
      ->required();
  fit_cmd->add_option("--d", fit.d, "Number of response columns")
      ->required()
      ->check(CLI::Range(2, 64));
  fit_cmd->add_option("--q", fit.q, "Number of covariate columns")
      ->required()
      ->check(CLI::Range(1, 1024));
  fit_cmd->add_option("--family", fit.family, "Copula family")->required();
  fit_cmd->add_option("--estimator", fit.estimator, "Estimator")
      ->check(CLI::IsMember({"ik", "pl", "pl_star"}));
  fit_cmd->add_option("--trim-D", fit.trim_d, "Trim constant D");
  fit_cmd->add_option("--trim-lambda", fit.trim_lambda, "Trim rate lambda");
  fit_cmd
      ->add_option("--transform", fit.transforms,
                   "Per-margin response transform (identity|log)")
      ->delimiter(',');
  fit_cmd
      ->add_option("--scale", fit.scales,
                   "Per-margin scale design (one|linear)")
      ->delimiter(',');
  fit_cmd->add_flag("--jitter", fit.jitter,
                    "Break ties with uniform noise at 1e-12 relative scale");
  add_common(fit_cmd, fit.common, "json");

  SimulateArgs sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Run a Monte Carlo scenario");
  CLI::Option* scen_opt =
      sim_cmd->add_option("--scenario", sim.scenario_path, "Scenario JSON");
  sim_cmd->add_option("--family", sim.family, "Copula family")
      ->excludes(scen_opt);
  sim_cmd->add_option("--tau", sim.tau, "True Kendall tau")
      ->excludes(scen_opt);
  sim_cmd->add_option("--margins", sim.margins,
                      "Margins tag (NE|NU|tt|NNE|NNU)")
      ->excludes(scen_opt);
  sim_cmd->add_option("--n", sim.n, "Sample size")->excludes(scen_opt);
  sim_cmd->add_option("--reps", sim.reps, "Replications")->excludes(scen_opt);
  sim_cmd
      ->add_option("--estimators", sim.estimators,
                   "Estimators (ik_oracle|ik|pl_oracle|pl|pl_star)")
      ->delimiter(',')
      ->excludes(scen_opt);
  sim_cmd->add_option("--trim-D", sim.trim_d, "Trim constant D")
      ->excludes(scen_opt);
  sim_cmd->add_option("--trim-lambda", sim.trim_lambda, "Trim rate lambda")
      ->excludes(scen_opt);
  add_common(sim_cmd, sim.common, "csv");

  DiagnoseArgs diag;
  CLI::App* diag_cmd = app.add_subcommand(
      "diagnose", "Report which asymptotic guarantee covers a model");
  diag_cmd->add_option("--family", diag.family, "Copula family")->required();
  diag_cmd
      ->add_option("--margins", diag.margins,
                   "Margin laws (normal|exponential|uniform|t5)")
      ->required()
      ->delimiter(',');
  add_common(diag_cmd, diag.common, "markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (sim_cmd->parsed()) {
      const bool inline_mode = sim.scenario_path.empty();
      if (inline_mode && sim.family.empty()) {
        raise(Errc::invalid_scenario,
              "need --scenario, or --family/--tau/--n/--reps");
      }
      return cmd_simulate(sim, inline_mode);
    }
    return cmd_diagnose(diag);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::numerical ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
