#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qsm {

using Complex = std::complex<double>;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

namespace linalg {

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant of degree 3, 5, 7, 9 or 13 chosen from the 1-norm.
RMatrix expm(const RMatrix& a);
CMatrix expm(const CMatrix& a);

/// Psi(t) = integral of exp(sA) over s in [0, t]. Evaluated as the
/// off-diagonal block of exp(t [[A, I], [0, 0]]), so singular A is fine and
/// negative t is allowed.
RMatrix psi(const RMatrix& a, double t);

struct HurwitzReport {
  bool hurwitz = false;
  /// Largest real part over the spectrum.
  double abscissa = 0.0;
};

HurwitzReport is_hurwitz(const RMatrix& a);

/// Solves A X + X A^T + Q = 0 for Hurwitz A (Bartels-Stewart on the complex
/// Schur form). Throws kNotHurwitz otherwise. The result is Hermitian.
CMatrix solve_lyapunov(const RMatrix& a, const CMatrix& q);
RMatrix solve_lyapunov(const RMatrix& a, const RMatrix& q);

/// Filtering-type algebraic Riccati equation
///   A P + P A^T + Sigma - (P C^T + B D^T) F^{-1} (C P + D B^T) = 0
/// with the cross term built from the dispersion block B (n x m) and the
/// measurement matrix D (r x m).
struct AreProblem {
  RMatrix a;
  RMatrix c;
  RMatrix sigma;
  RMatrix b;
  RMatrix d;
  RMatrix f;
};

struct AreSolution {
  RMatrix p;
  /// K = (P C^T + B D^T) F^{-1}
  RMatrix gain;
  /// Frobenius residual divided by the size of the largest term.
  double residual = 0.0;
  double closed_loop_abscissa = 0.0;
  /// Relative Frobenius distance between the two solver paths.
  double method_discrepancy = 0.0;
};

/// Stabilizing solution. Runs the Hamiltonian invariant-subspace solver and
/// Newton-Kleinman, and refuses to return if they disagree by more than
/// 1e-6 or if A - K C is not Hurwitz (kDesignInfeasible).
AreSolution solve_are(const AreProblem& problem);

/// Stable invariant subspace of the Hamiltonian matrix, extracted with the
/// Newton iteration for the matrix sign function.
RMatrix solve_are_invariant_subspace(const AreProblem& problem);

/// Newton-Kleinman iteration started from a gain with A - K0 C Hurwitz.
RMatrix solve_are_newton(const AreProblem& problem, const RMatrix& initial_gain);

RMatrix are_residual(const AreProblem& problem, const RMatrix& p);
RMatrix are_gain(const AreProblem& problem, const RMatrix& p);
double are_scaled_residual(const AreProblem& problem, const RMatrix& p);

// Small helpers shared by the modules.

double min_eigenvalue_hermitian(const CMatrix& h);
double min_eigenvalue_symmetric(const RMatrix& s);
RMatrix symmetrize(const RMatrix& s);
CMatrix hermitize(const CMatrix& h);

}  // namespace linalg
}  // namespace qsm
