#pragma once

#include <stdexcept>
#include <string>

namespace rescop {

// Every failure mode the library reports.  Codes are grouped by kind:
// input errors mean the caller handed us something malformed, numerical
// errors mean a well-formed computation could not be completed.
enum class Errc {
  // dataset / general input
  missing_column,
  non_numeric_cell,
  row_count_too_small,
  non_finite_value,
  invalid_argument,
  length_mismatch,
  io_failure,

  // marginals
  rank_deficient_design,
  non_positive_response_for_log,
  quantile_argument_out_of_range,

  // ranks
  ties_detected,

  // copulas
  parameter_out_of_domain,
  point_on_boundary,
  tau_out_of_range,

  // estimate
  no_bracket_found,
  max_iterations,
  all_points_trimmed,
  singular_information,
  invalid_trim_policy,

  // montecarlo
  invalid_scenario,
  scenario_unstable,
  empty_input,
};

enum class ErrorKind { input, numerical };

constexpr ErrorKind kind_of(Errc c) {
  switch (c) {
    case Errc::tau_out_of_range:
    case Errc::no_bracket_found:
    case Errc::max_iterations:
    case Errc::all_points_trimmed:
    case Errc::singular_information:
    case Errc::scenario_unstable:
    case Errc::point_on_boundary:
      return ErrorKind::numerical;
    default:
      return ErrorKind::input;
  }
}

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rescop
