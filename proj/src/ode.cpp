#include "qsm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsm/errors.hpp"

namespace qsm::ode {
namespace {

void check_finite(const RVector& y, double t) {
  if (!y.allFinite()) {
    throw Error(ErrorCode::kIntegrationFailure,
                "non-finite state at t = " + std::to_string(t));
  }
}

RVector rk4_step(const Rhs& f, double t, const RVector& y, double h) {
  const RVector k1 = f(t, y);
  const RVector k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const RVector k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const RVector k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct DpStep {
  RVector y;
  double error_norm;
};

DpStep dopri_step(const Rhs& f, double t, const RVector& y, double h,
                  const StepPolicy& policy) {
  const RVector k1 = f(t, y);
  const RVector k2 = f(t + c2 * h, y + h * a21 * k1);
  const RVector k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
  const RVector k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const RVector k5 =
      f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const RVector k6 = f(
      t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  RVector next =
      y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const RVector k7 = f(t + h, next);
  const RVector err =
      h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double scale =
        policy.abs_tol +
        policy.rel_tol * std::max(std::abs(y(i)), std::abs(next(i)));
    sum += (err(i) / scale) * (err(i) / scale);
  }
  const double norm =
      y.size() > 0 ? std::sqrt(sum / static_cast<double>(y.size())) : 0.0;
  return {std::move(next), norm};
}

// Advances y from t to t_target with the adaptive pair; h is carried over.
void advance_adaptive(const OdeProblem& pr, double& t, RVector& y, double& h,
                      double t_target) {
  while (t < t_target) {
    const double remaining = t_target - t;
    const bool last = h >= remaining;
    const double trial = last ? remaining : h;
    DpStep step = dopri_step(pr.rhs, t, y, trial, pr.policy);
    if (!std::isfinite(step.error_norm)) step.error_norm = 1e10;
    if (step.error_norm <= 1.0) {
      t = last ? t_target : t + trial;
      y = std::move(step.y);
      if (pr.project) pr.project(y);
      check_finite(y, t);
    }
    const double factor =
        step.error_norm == 0.0
            ? 5.0
            : std::clamp(0.9 * std::pow(step.error_norm, -0.2), 0.2, 5.0);
    if (!last || step.error_norm > 1.0) h = trial * factor;
    if (h < pr.policy.min_step) {
      throw Error(ErrorCode::kIntegrationFailure,
                  "step size underflow at t = " + std::to_string(t) +
                      " (problem too stiff for the explicit scheme)");
    }
  }
}

}  // namespace

std::vector<double> uniform_grid(double t0, double t1, std::size_t count) {
  if (count < 2 || !(t1 > t0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "uniform_grid needs count >= 2 and t1 > t0");
  }
  std::vector<double> grid(count);
  const double span = t1 - t0;
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = t0 + span * static_cast<double>(i) /
                       static_cast<double>(count - 1);
  }
  grid.back() = t1;
  return grid;
}

void require_increasing(const std::vector<double>& grid, const char* what) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + ": time grid is not increasing");
    }
  }
}

Trajectory integrate(const OdeProblem& pr) {
  if (!pr.rhs) {
    throw Error(ErrorCode::kInvalidArgument, "integrate: missing rhs");
  }
  if (pr.y0.size() != pr.dimension) {
    throw Error(ErrorCode::kDimensionMismatch,
                "integrate: initial state has wrong dimension");
  }
  if (pr.t_end < pr.t0) {
    throw Error(ErrorCode::kInvalidArgument,
                "integrate: horizon precedes initial time");
  }
  if (!(pr.policy.step > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "integrate: step must be > 0");
  }
  std::vector<double> outputs = pr.output_times;
  if (outputs.empty()) outputs = {pr.t0, pr.t_end};
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i] < pr.t0 || outputs[i] > pr.t_end ||
        (i > 0 && outputs[i] < outputs[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "integrate: output times must be sorted within the horizon");
    }
  }

  Trajectory out;
  out.times.reserve(outputs.size());
  out.states.reserve(outputs.size());
  double t = pr.t0;
  RVector y = pr.y0;
  if (pr.project) pr.project(y);
  double h = pr.policy.step;
  for (double target : outputs) {
    if (target > t) {
      if (pr.policy.kind == StepPolicy::Kind::kFixed) {
        const double span = target - t;
        const auto steps =
            static_cast<long>(std::ceil(span / pr.policy.step - 1e-9));
        const double step = span / static_cast<double>(std::max(1L, steps));
        const double start = t;
        for (long i = 0; i < std::max(1L, steps); ++i) {
          const double ti = start + step * static_cast<double>(i);
          y = rk4_step(pr.rhs, ti, y, step);
          if (pr.project) pr.project(y);
          check_finite(y, ti + step);
        }
        t = target;
      } else {
        advance_adaptive(pr, t, y, h, target);
      }
    }
    out.times.push_back(target);
    out.states.push_back(y);
  }
  return out;
}

}  // namespace qsm::ode
