#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsm/algebra.hpp"
#include "qsm/moments.hpp"

namespace qsm {

enum class GainMode { kOptimal, kFixed, kSteady };

struct MeasurementConfig {
  RMatrix d;
  GainMode mode = GainMode::kOptimal;
  /// Only for GainMode::kFixed.
  RMatrix k;
};

struct MomentQueryConfig {
  std::vector<double> times;
  std::vector<RVector> directions;
};

/// Everything one CLI invocation needs. Loaded from a JSON object with flat
/// keys; matrices are row-major number lists with their row count given by
/// the companion key (m for M, r for D).
struct Scenario {
  StructureConstants sc;
  RVector energy;
  RMatrix coupling;
  RVector offset;
  RVector mu0;
  double t0 = 0.0;
  double horizon = 1.0;
  double dt = 1e-2;
  std::optional<MeasurementConfig> measurement;
  std::vector<double> omega;
  std::vector<RVector> qcf_directions;
  std::vector<MomentQueryConfig> moment_queries;
  /// Terms f(u^T X) whose long-run average `invariant` reports.
  std::vector<GrowthTerm> growth_terms;
  /// Seeded constant-gain comparisons run next to the Riccati filter.
  int gain_comparisons = 0;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  std::vector<double> grid() const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// {"n", "alpha", "alpha_im" (only when nonzero), "beta_re", "beta_im"} with
/// row-major alpha and beta flattened in (j, k, l) order.
std::string serialize_constants(const StructureConstants& sc);
StructureConstants parse_constants(std::string_view text);

}  // namespace qsm
