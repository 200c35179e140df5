#include "rescop/errors.hpp"

namespace rescop {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::missing_column: return "MissingColumn";
    case Errc::non_numeric_cell: return "NonNumericCell";
    case Errc::row_count_too_small: return "RowCountTooSmall";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::io_failure: return "IoFailure";
    case Errc::rank_deficient_design: return "RankDeficientDesign";
    case Errc::non_positive_response_for_log: return "NonPositiveResponseForLog";
    case Errc::quantile_argument_out_of_range: return "QuantileArgumentOutOfRange";
    case Errc::ties_detected: return "TiesDetected";
    case Errc::parameter_out_of_domain: return "ParameterOutOfDomain";
    case Errc::point_on_boundary: return "PointOnBoundary";
    case Errc::tau_out_of_range: return "TauOutOfRange";
    case Errc::no_bracket_found: return "NoBracketFound";
    case Errc::max_iterations: return "MaxIterations";
    case Errc::all_points_trimmed: return "AllPointsTrimmed";
    case Errc::singular_information: return "SingularInformation";
    case Errc::invalid_trim_policy: return "InvalidTrimPolicy";
    case Errc::invalid_scenario: return "InvalidScenario";
    case Errc::scenario_unstable: return "ScenarioUnstable";
    case Errc::empty_input: return "EmptyInput";
  }
  return "UnknownError";
}

}  // namespace rescop
