#include "rescop/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rescop/errors.hpp"

namespace rescop {

namespace {

constexpr double kBetaCap = 0.499;
constexpr int kPointsPerDecade = 8;
constexpr int kDecades = 7;  // grid covers 1e-1 down to 1e-8

double g_of(const ErrorLaw& law, double u) {
  const double q = law.quantile(u);
  return law.density(q) * (1.0 + std::fabs(q));
}

struct TailSummary {
  double limit = 0.0;     // g at the deepest point
  double exponent = 0.0;  // slope of log g vs log u over the deepest decade
  bool monotone = true;   // g moves in one direction along the tail grid
};

// `probe(u)` must map u in (0, 1e-1] to the tail coordinate: identity for
// the lower tail, u -> 1-u for the upper one.
TailSummary summarize_tail(const ErrorLaw& law,
                           const std::function<double(double)>& probe) {
  std::vector<double> log_u, log_g;
  TailSummary s;
  double prev_g = -1.0;
  bool seen_up = false, seen_down = false;
  // Walk from 1e-1 down to 1e-8 on a geometric grid.
  const int steps = kDecades * kPointsPerDecade;
  for (int k = 0; k <= steps; ++k) {
    const double u = std::pow(10.0, -1.0 - static_cast<double>(k) / kPointsPerDecade);
    const double g = g_of(law, probe(u));
    if (prev_g >= 0.0) {
      if (g > prev_g * (1.0 + 1e-9)) seen_up = true;
      if (g < prev_g * (1.0 - 1e-9)) seen_down = true;
    }
    prev_g = g;
    if (u <= 1e-7 * (1.0 + 1e-12)) {
      log_u.push_back(std::log(u));
      log_g.push_back(std::log(std::max(g, 1e-300)));
    }
    if (k == steps) s.limit = g;
  }
  s.monotone = !(seen_up && seen_down);
  // Least-squares slope over the deepest decade.
  const auto m = static_cast<double>(log_u.size());
  double su = 0.0, sg = 0.0, suu = 0.0, sug = 0.0;
  for (std::size_t i = 0; i < log_u.size(); ++i) {
    su += log_u[i];
    sg += log_g[i];
    suu += log_u[i] * log_u[i];
    sug += log_u[i] * log_g[i];
  }
  s.exponent = (m * sug - su * sg) / (m * suu - su * su);
  return s;
}

double side_beta(const TailSummary& s) {
  // An exponent near zero means g has a positive limit at the boundary,
  // which pins the usable exponent to zero exactly.
  if (s.exponent < 0.01) return 0.0;
  return std::min(s.exponent, kBetaCap);
}

}  // namespace

const char* theorem_cover_name(TheoremCover cover) {
  switch (cover) {
    case TheoremCover::theorem1: return "theorem1";
    case TheoremCover::theorem2: return "theorem2";
    case TheoremCover::no_guarantee: return "no_guarantee";
  }
  return "unknown";
}

BetaVerdict classify_beta(const ErrorLaw& law) {
  const TailSummary lower =
      summarize_tail(law, [](double u) { return u; });
  const TailSummary upper =
      summarize_tail(law, [](double u) { return 1.0 - u; });

  BetaVerdict verdict;
  verdict.left_limit = lower.limit;
  verdict.right_limit = upper.limit;
  verdict.left_exponent = lower.exponent;
  verdict.right_exponent = upper.exponent;
  verdict.tail_monotone = lower.monotone && upper.monotone;
  verdict.beta_max = std::min(side_beta(lower), side_beta(upper));
  // All shipped laws have densities continuous on their support.
  verdict.continuous_density_violated = false;
  return verdict;
}

Applicability check_applicability(const CopulaFamily& family,
                                  const std::vector<ErrorLaw>& margins) {
  if (margins.size() != static_cast<std::size_t>(family.dim())) {
    raise(Errc::length_mismatch,
          "got " + std::to_string(margins.size()) + " margins for a " +
              std::to_string(family.dim()) + "-dimensional family");
  }

  Applicability result;
  bool all_positive = true;
  for (std::size_t j = 0; j < margins.size(); ++j) {
    BetaVerdict v = classify_beta(margins[j]);
    if (v.beta_max <= 0.0) {
      all_positive = false;
      result.reasons.push_back(
          "margin " + std::to_string(j + 1) + " (" + margins[j].name() +
          "): boundary exponent is 0, the density does not vanish at the "
          "support edge");
    } else {
      result.reasons.push_back("margin " + std::to_string(j + 1) + " (" +
                               margins[j].name() + "): boundary exponent " +
                               std::to_string(v.beta_max));
    }
    if (!v.tail_monotone) {
      result.reasons.push_back("margin " + std::to_string(j + 1) +
                               ": warning, tail density is not monotone on "
                               "the probe grid");
    }
    result.margins.push_back(std::move(v));
  }

  const bool bounded = family.score_class() == ScoreClass::bounded;
  if (all_positive) {
    result.verdict = TheoremCover::theorem1;
    result.reasons.push_back(
        "all margins keep a positive boundary exponent, so the strong "
        "residual-rank guarantee applies to the " + family.name() +
        " score");
  } else if (bounded) {
    result.verdict = TheoremCover::theorem2;
    result.reasons.push_back(
        "the " + family.name() +
        " score is bounded on the unit cube, which covers margins whose "
        "density stays positive at the boundary");
  } else {
    result.verdict = TheoremCover::no_guarantee;
    result.reasons.push_back(
        "the " + family.name() +
        " score is unbounded near the boundary and at least one margin has "
        "exponent 0: no asymptotic guarantee is known for this pairing");
    if (family.tag() == FamilyTag::gaussian) {
      result.reasons.push_back(
          "note: simulations at moderate dependence behave well for the "
          "gaussian family even in this case; whether a weaker margin "
          "condition suffices is an open question");
    }
  }
  return result;
}

}  // namespace rescop
