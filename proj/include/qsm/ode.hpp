#pragma once

#include <functional>
#include <vector>

#include "qsm/linalg.hpp"

namespace qsm::ode {

struct StepPolicy {
  enum class Kind { kFixed, kAdaptive };

  Kind kind = Kind::kFixed;
  /// Fixed scheme: largest step. Adaptive scheme: initial step.
  double step = 1e-2;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Adaptive scheme gives up below this step.
  double min_step = 1e-12;

  static StepPolicy fixed(double h) { return {Kind::kFixed, h}; }
  static StepPolicy adaptive(double abs_tol, double rel_tol) {
    StepPolicy p;
    p.kind = Kind::kAdaptive;
    p.abs_tol = abs_tol;
    p.rel_tol = rel_tol;
    return p;
  }
};

using Rhs = std::function<RVector(double, const RVector&)>;

struct OdeProblem {
  Eigen::Index dimension = 0;
  Rhs rhs;
  double t0 = 0.0;
  RVector y0;
  double t_end = 0.0;
  /// Sample times in [t0, t_end], nondecreasing. Empty means {t0, t_end}.
  std::vector<double> output_times;
  StepPolicy policy;
  /// Applied to the state after every accepted step (e.g. symmetrizing a
  /// packed covariance matrix).
  std::function<void(RVector&)> project;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RVector> states;
};

/// Classical RK4 for the fixed policy (the step is shrunk so that every
/// output time is hit exactly), Dormand-Prince 5(4) for the adaptive one.
/// Throws kIntegrationFailure on step underflow or non-finite states.
Trajectory integrate(const OdeProblem& problem);

/// count >= 2 equally spaced points from t0 to t1 inclusive.
std::vector<double> uniform_grid(double t0, double t1, std::size_t count);

/// Checks that the grid is strictly increasing, throws kInvalidArgument.
void require_increasing(const std::vector<double>& grid, const char* what);

}  // namespace qsm::ode
