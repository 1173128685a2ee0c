#pragma once

#include <functional>
#include <vector>

#include "qsm/dynamics.hpp"
#include "qsm/ode.hpp"

namespace qsm {

/// Z = D Y observed through a full-row-rank D with D J D^T = 0.
struct MeasurementSpec {
  RMatrix d;       // r x m
  RMatrix f;       // D D^T
  RMatrix c;       // 2 D J M
  RVector offset;  // 2 D J N

  Eigen::Index r() const { return d.rows(); }
};

/// Rejects r > m/2 (kInvalidArgument), singular D D^T (kRankDeficient) and
/// |D J D^T| > 1e-12 (kNonCommutingMeasurement).
MeasurementSpec build_measurement(const SystemSpec& spec, const RMatrix& d);

/// Real part of the covariance forcing V(mu), assembled directly from the
/// real and imaginary parts of the structure constants.
RMatrix sigma_of_mu(const SystemSpec& spec, const RVector& mu);

/// P(0) = alpha + Re beta . mu0 - mu0 mu0^T
RMatrix initial_error_covariance(const StructureConstants& sc,
                                 const RVector& mu0);

/// G = P + i Theta . mu, the full quantum covariance of the estimation error.
CMatrix error_covariance(const StructureConstants& sc, const RMatrix& p,
                         const RVector& mu);

/// Right-hand side of the error-covariance ODE for a given gain.
RMatrix error_cov_rhs(const CoefficientSet& coeffs,
                      const MeasurementSpec& meas, const RMatrix& gain,
                      const RMatrix& p, const RVector& mu);

/// K* = (P C^T + B(mu) D^T) F^{-1}
RMatrix optimal_gain(const RMatrix& p, const RVector& mu,
                     const MeasurementSpec& meas, const CoefficientSet& coeffs);

using GainFunction = std::function<RMatrix(double)>;

struct ErrorCovTrajectory {
  std::vector<double> times;
  std::vector<RMatrix> p;
};

/// P(t) for an arbitrary gain schedule, starting at grid.front().
ErrorCovTrajectory error_cov_trajectory(
    const CoefficientSet& coeffs, const MeasurementSpec& meas,
    const GainFunction& gain_fn, const RMatrix& p0,
    const MeanFunction& mean_fn, const std::vector<double>& grid,
    const ode::StepPolicy& policy = ode::StepPolicy::fixed(1e-2));

struct RiccatiTrajectory {
  std::vector<double> times;
  std::vector<RMatrix> p;
  std::vector<RMatrix> gain;
};

RiccatiTrajectory riccati_trajectory(
    const CoefficientSet& coeffs, const MeasurementSpec& meas,
    const RMatrix& p0, const MeanFunction& mean_fn,
    const std::vector<double>& grid,
    const ode::StepPolicy& policy = ode::StepPolicy::fixed(1e-2));

/// Steady-state observer from the stabilizing Riccati solution.
struct ObserverDesign {
  RVector mu_inf;
  RMatrix p;
  RMatrix gain;
  double closed_loop_abscissa = 0.0;
  double are_residual = 0.0;
  double method_discrepancy = 0.0;
};

/// Needs Hurwitz A (kNotHurwitz); kDesignInfeasible when no stabilizing
/// solution is found.
ObserverDesign steady_design(const CoefficientSet& coeffs,
                             const MeasurementSpec& meas);

/// d xi = (drift xi + offset) dt + input_gain dZ
struct ObserverOde {
  RMatrix drift;
  RVector offset;
  RMatrix input_gain;
};

ObserverOde observer_ode_coefficients(const CoefficientSet& coeffs,
                                      const MeasurementSpec& meas,
                                      const RMatrix& gain);

}  // namespace qsm
