#include "qsm/oracle.hpp"

#include <cmath>

#include "qsm/errors.hpp"

namespace qsm::oracle {
namespace {

constexpr double kStructureTol = 1e-12;

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// sinh(s)/s, even in s so the branch of the square root does not matter.
Complex sinhc(Complex s) {
  if (std::abs(s) < 1e-4) {
    const Complex s2 = s * s;
    return 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
  }
  return std::sinh(s) / s;
}

// e^Z = e^{tr/2} (cosh(s) I + sinh(s)/s Z0), Z0 traceless, Z0^2 = s^2 I.
CMatrix expm_2x2(const CMatrix& z) {
  const Complex half_trace = 0.5 * (z(0, 0) + z(1, 1));
  CMatrix z0 = z;
  z0.diagonal().array() -= half_trace;
  const Complex s = std::sqrt(-(z0(0, 0) * z0(1, 1) - z0(0, 1) * z0(1, 0)));
  CMatrix out = sinhc(s) * z0;
  out.diagonal().array() += std::cosh(s);
  return std::exp(half_trace) * out;
}

}  // namespace

MatrixRep make_rep(std::vector<CMatrix> generators, CMatrix rho,
                   const StructureConstants& sc) {
  if (static_cast<Eigen::Index>(generators.size()) != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "representation needs one matrix per variable");
  }
  const Eigen::Index dim = rho.rows();
  if (rho.cols() != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "rho must be square");
  }
  for (const CMatrix& g : generators) {
    if (g.rows() != dim || g.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "generator size");
    }
    if (max_abs(g - g.adjoint()) > kStructureTol) {
      throw Error(ErrorCode::kInvalidArgument, "generator is not Hermitian");
    }
  }
  if (max_abs(rho - rho.adjoint()) > kStructureTol ||
      std::abs(rho.trace() - 1.0) > kStructureTol ||
      linalg::min_eigenvalue_hermitian(rho) < -kStructureTol) {
    throw Error(ErrorCode::kInvalidArgument, "rho is not a density matrix");
  }
  MatrixRep rep{dim, std::move(generators), std::move(rho)};
  const double residual = verify_structure(rep, sc);
  if (residual > kStructureTol) {
    throw Error(ErrorCode::kInadmissibleConstants,
                "generators do not satisfy the structure constants (residual " +
                    std::to_string(residual) + ")");
  }
  return rep;
}

CMatrix pauli_matrix(int k) {
  const Complex i(0.0, 1.0);
  CMatrix s(2, 2);
  switch (k) {
    case 0: s << 0.0, 1.0, 1.0, 0.0; break;
    case 1: s << 0.0, -i, i, 0.0; break;
    case 2: s << 1.0, 0.0, 0.0, -1.0; break;
    default:
      throw Error(ErrorCode::kInvalidArgument, "Pauli index must be 0, 1 or 2");
  }
  return s;
}

CMatrix bloch_density(const RVector& mu) {
  if (mu.size() != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "Bloch vector must have 3 entries");
  }
  if (mu.norm() > 1.0 + 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "Bloch vector outside the unit ball");
  }
  CMatrix rho = CMatrix::Identity(2, 2);
  for (int k = 0; k < 3; ++k) rho += mu(k) * pauli_matrix(k);
  return 0.5 * rho;
}

MatrixRep pauli_rep(const RVector& mu) {
  return make_rep({pauli_matrix(0), pauli_matrix(1), pauli_matrix(2)},
                  bloch_density(mu), pauli_preset());
}

double expect(const MatrixRep& rep, const CMatrix& observable) {
  if (max_abs(observable - observable.adjoint()) > kStructureTol) {
    throw Error(ErrorCode::kInvalidArgument, "observable is not Hermitian");
  }
  return trace_against(rep, observable).real();
}

Complex trace_against(const MatrixRep& rep, const CMatrix& z) {
  if (z.rows() != rep.dim || z.cols() != rep.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "observable size");
  }
  return (rep.rho * z).trace();
}

double verify_structure(const MatrixRep& rep, const StructureConstants& sc) {
  const Eigen::Index n = sc.n();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      CMatrix diff = rep.generators[j] * rep.generators[k];
      diff.diagonal().array() -= sc.alpha()(j, k);
      for (Eigen::Index l = 0; l < n; ++l)
        diff -= sc.beta()(j, k, l) * rep.generators[l];
      worst = std::max(worst, max_abs(diff));
    }
  }
  return worst;
}

CMatrix linear_form(const MatrixRep& rep, const CVector& u) {
  if (u.size() != static_cast<Eigen::Index>(rep.generators.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "direction size");
  }
  CMatrix out = CMatrix::Zero(rep.dim, rep.dim);
  for (Eigen::Index k = 0; k < u.size(); ++k) out += u(k) * rep.generators[k];
  return out;
}

Complex initial_moment(const MatrixRep& rep,
                       const std::vector<CVector>& directions) {
  CMatrix product = CMatrix::Identity(rep.dim, rep.dim);
  for (const CVector& u : directions) product = linear_form(rep, u) * product;
  return trace_against(rep, product);
}

CMatrix apply_function(const EntireFunction& f, const CMatrix& z) {
  if (f.is_exponential() && z.rows() == 2) {
    return expm_2x2(CMatrix(f.rate() * z));
  }
  const Eigen::Index d = z.rows();
  CMatrix power = CMatrix::Identity(d, d);
  CMatrix sum = f.taylor_coefficient(0) * power;
  for (int k = 1; k < 400; ++k) {
    power = power * z;
    const CMatrix term = f.taylor_coefficient(k) * power;
    sum += term;
    if (f.is_exponential() && k > 8 &&
        max_abs(term) <= 1e-17 * std::max(1.0, max_abs(sum))) {
      break;
    }
  }
  return sum;
}

double verify_reduction(const MatrixRep& rep, const StructureConstants& sc,
                        const EntireFunction& f, const CVector& u) {
  const CMatrix exact = apply_function(f, linear_form(rep, u));
  const AffineOperatorVector red = reduce_entire(sc, f, u);
  CMatrix reduced = red.constant(0) * CMatrix::Identity(rep.dim, rep.dim);
  reduced += linear_form(rep, red.linear.row(0).transpose());
  return max_abs(exact - reduced);
}

}  // namespace qsm::oracle
