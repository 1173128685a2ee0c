#pragma once

#include <vector>

#include "qsm/algebra.hpp"
#include "qsm/moments.hpp"

namespace qsm::oracle {

/// Concrete Hermitian matrices X_1..X_n on C^dim with a density matrix.
struct MatrixRep {
  Eigen::Index dim = 0;
  std::vector<CMatrix> generators;
  CMatrix rho;
};

/// Checks Hermitian generators, a unit-trace PSD rho, and that the products
/// of the generators reproduce sc to 1e-12 (kInadmissibleConstants).
MatrixRep make_rep(std::vector<CMatrix> generators, CMatrix rho,
                   const StructureConstants& sc);

/// sigma_1, sigma_2, sigma_3 for k = 0, 1, 2.
CMatrix pauli_matrix(int k);

/// (I + mu . sigma) / 2; requires |mu| <= 1.
CMatrix bloch_density(const RVector& mu);

/// Pauli matrices with rho = bloch_density(mu).
MatrixRep pauli_rep(const RVector& mu);

/// Tr(rho H) for Hermitian H (kInvalidArgument otherwise).
double expect(const MatrixRep& rep, const CMatrix& observable);

/// Tr(rho Z) for an arbitrary matrix.
Complex trace_against(const MatrixRep& rep, const CMatrix& z);

/// max |X_j X_k - alpha_jk I - sum_l beta_jkl X_l|
double verify_structure(const MatrixRep& rep, const StructureConstants& sc);

/// sum_k u_k X_k
CMatrix linear_form(const MatrixRep& rep, const CVector& u);

/// Tr(rho (u_q^T X) ... (u_1^T X)), the equal-time moment.
Complex initial_moment(const MatrixRep& rep,
                       const std::vector<CVector>& directions);

/// f applied to a small matrix by summing its Maclaurin series, or in closed
/// form for the exponential of a 2 x 2 matrix.
CMatrix apply_function(const EntireFunction& f, const CMatrix& z);

/// max |f(u^T X) - (c0 I + c^T X)| with (c0, c) from reduce_entire.
double verify_reduction(const MatrixRep& rep, const StructureConstants& sc,
                        const EntireFunction& f, const CVector& u);

}  // namespace qsm::oracle
