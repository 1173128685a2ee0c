#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace qsm::cli {

struct RunOptions {
  /// validate | simulate | invariant | moments | filter
  std::string command;
  std::string config_path;
  /// Overrides the scenario's output_dir.
  std::optional<std::string> out_dir;
  /// Overrides the scenario's seed.
  std::optional<std::uint64_t> seed;
  /// Forces the steady-state design in `filter`.
  bool steady = false;
};

/// Runs one pipeline and writes its CSV tables and summary.kv. Returns 0 on
/// success; on failure writes `error code=<NAME> message=<text>` as a single
/// line to err and returns 1.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// %.17g
std::string format_double(double x);

}  // namespace qsm::cli
