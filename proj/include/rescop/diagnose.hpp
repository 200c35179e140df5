#pragma once

#include <string>
#include <vector>

#include "rescop/copulas.hpp"
#include "rescop/marginals.hpp"

namespace rescop {

// Boundary behavior of one error law, summarized through
//   g(u) = f(F^{-1}(u)) (1 + |F^{-1}(u)|)
// evaluated on a geometric grid running into each tail.  beta_max is the
// largest usable boundary exponent: the smaller of the two one-sided
// exponents, clamped to [0, 0.499], with a positive limit forcing zero.
struct BetaVerdict {
  double beta_max = 0.0;
  bool continuous_density_violated = false;
  double left_limit = 0.0;        // g at the deepest grid point, lower tail
  double right_limit = 0.0;       // same for the upper tail
  double left_exponent = 0.0;     // log-log slope over the deepest decade
  double right_exponent = 0.0;
  bool tail_monotone = true;      // g moves in one direction along each tail
};

BetaVerdict classify_beta(const ErrorLaw& law);

enum class TheoremCover { theorem1, theorem2, no_guarantee };

const char* theorem_cover_name(TheoremCover cover);

struct Applicability {
  TheoremCover verdict = TheoremCover::no_guarantee;
  std::vector<BetaVerdict> margins;
  std::vector<std::string> reasons;
};

// Decides which asymptotic guarantee covers the estimator: every margin
// with a positive boundary exponent gives the strong result; a bounded
// parameter score rescues margins that touch their boundary; otherwise no
// guarantee is known.
Applicability check_applicability(const CopulaFamily& family,
                                  const std::vector<ErrorLaw>& margins);

}  // namespace rescop
