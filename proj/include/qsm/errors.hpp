#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsm {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kInadmissibleConstants,
  kNotHurwitz,
  kDesignInfeasible,
  kNonCommutingMeasurement,
  kRankDeficient,
  kIntegrationFailure,
  kConfig,
  kIo,
};

/// Stable identifier used by the CLI on its single-line error output.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qsm
