#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsm/algebra.hpp"
#include "qsm/linalg.hpp"
#include "qsm/ode.hpp"

namespace qsm {

/// Plant with Hamiltonian E^T X and coupling operators M X + N driven by m
/// quantum Wiener channels (m even).
struct SystemSpec {
  StructureConstants sc;
  RVector energy;    // E
  RMatrix coupling;  // M, m x n
  RVector offset;    // N

  Eigen::Index n() const { return sc.n(); }
  Eigen::Index m() const { return coupling.rows(); }
};

/// Checks sizes, evenness of m and the algebraic constraints on sc.
SystemSpec make_system(StructureConstants sc, RVector energy, RMatrix coupling,
                       RVector offset, double tol = kDefaultValidationTol);

/// [[0, I], [-I, 0]] with m/2 blocks.
RMatrix symplectic_j(Eigen::Index m);

/// Drift A X + b and dispersion B(X) dW of the quasilinear QSDE.
struct CoefficientSet {
  RMatrix a;
  RVector b;
  RMatrix j;
  /// I + iJ, the Ito matrix of the input fields.
  CMatrix omega;
  SystemSpec system;

  Eigen::Index n() const { return a.rows(); }
  /// B(x) = 2 (Theta . x) M^T for a real vector x (e.g. the mean).
  RMatrix dispersion(const RVector& x) const;
};

CoefficientSet synthesize(const SystemSpec& spec);

/// V(mu) = E(B(X) Omega B(X)^T), the forcing of the covariance ODE.
CMatrix diffusion_matrix(const SystemSpec& spec, const RVector& mu);

/// alpha + beta . mu - mu mu^T
CMatrix covariance_from_mean(const StructureConstants& sc, const RVector& mu);

/// |mu - tau/2| - gamma; nonpositive inside the admissible ball.
double admissible_ball_excess(const StructureConstants& sc, const RVector& mu);

struct MomentState {
  double t = 0.0;
  RVector mu;
  CMatrix cov;
};

/// Non-fatal problems with an initial state: indefinite covariance, or a
/// covariance that disagrees with covariance_from_mean(mu).
std::vector<std::string> admissibility_warnings(const StructureConstants& sc,
                                                const MomentState& state,
                                                double tol = 1e-8);

using MeanFunction = std::function<RVector(double)>;

/// t -> e^{(t - t0) A} mu0 + Psi(t - t0) b
MeanFunction closed_form_mean(const CoefficientSet& coeffs, RVector mu0,
                              double t0 = 0.0);

enum class MeanMethod { kClosedForm, kIntegrate };

struct MeanTrajectory {
  std::vector<double> times;
  std::vector<RVector> mu;
};

/// Samples mu(t) on an increasing grid starting at grid.front().
MeanTrajectory mean_trajectory(
    const CoefficientSet& coeffs, const RVector& mu0,
    const std::vector<double>& grid,
    MeanMethod method = MeanMethod::kClosedForm,
    const ode::StepPolicy& policy = ode::StepPolicy::fixed(1e-2));

/// Integrates d cov/dt = A cov + cov A^T + V(mu(t)) from state0.t with the
/// mean taken from mean_fn (closed form from state0 when empty).
std::vector<MomentState> covariance_trajectory(
    const CoefficientSet& coeffs, const MomentState& state0,
    const std::vector<double>& grid,
    const ode::StepPolicy& policy = ode::StepPolicy::fixed(1e-2),
    MeanFunction mean_fn = {});

struct InvariantState {
  RVector mu;
  /// Solution of A Gamma + Gamma A^T + Upsilon = 0.
  CMatrix gamma;
  /// alpha + beta . mu - mu mu^T at the limit mean.
  CMatrix gamma_algebraic;
  /// V(mu) at the limit mean.
  CMatrix upsilon;
  double ale_residual = 0.0;
  /// max |gamma - gamma_algebraic|
  double route_discrepancy = 0.0;
};

/// Throws kNotHurwitz when A has no invariant state.
InvariantState invariant_state(const CoefficientSet& coeffs);

/// S(w) = (iwI - A)^{-1} Gamma - Gamma (iwI + A^T)^{-1}
CMatrix spectral_density(const CoefficientSet& coeffs, const CMatrix& gamma,
                         double omega);
/// S(w) = -(iwI - A)^{-1} Upsilon (iwI + A^T)^{-1}
CMatrix spectral_density_from_noise(const CoefficientSet& coeffs,
                                    const CMatrix& upsilon, double omega);

/// Stability certificate for the three-variable Pauli plant.
struct PauliStability {
  RMatrix lambda;
  /// Eigenvalues of lambda, ascending.
  RVector spectrum;
  Eigen::Index rank = 0;
  /// rank M >= 2, which makes A + A^T = -4 Lambda negative definite.
  bool hurwitz_guarantee = false;
};

PauliStability pauli_stability(const RMatrix& coupling);

}  // namespace qsm
