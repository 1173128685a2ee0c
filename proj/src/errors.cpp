#include "qsm/errors.hpp"

namespace qsm {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kInadmissibleConstants: return "INADMISSIBLE_CONSTANTS";
    case ErrorCode::kNotHurwitz: return "NOT_HURWITZ";
    case ErrorCode::kDesignInfeasible: return "DESIGN_INFEASIBLE";
    case ErrorCode::kNonCommutingMeasurement: return "NON_COMMUTING_MEASUREMENT";
    case ErrorCode::kRankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::kIntegrationFailure: return "INTEGRATION_FAILURE";
    case ErrorCode::kConfig: return "CONFIG";
    case ErrorCode::kIo: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace qsm
