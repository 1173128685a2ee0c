#include "qsm/algebra.hpp"

#include <algorithm>
#include <cmath>

#include "qsm/errors.hpp"

namespace qsm {

StructureConstants::StructureConstants(CMatrix alpha, Array3<Complex> beta)
    : alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.rows() == 0 || alpha_.rows() != alpha_.cols() ||
      beta_.size() != alpha_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "structure constants: alpha must be n x n and beta n x n x n");
  }
  if (!alpha_.allFinite() ||
      std::any_of(beta_.data().begin(), beta_.data().end(),
                  [](Complex z) { return !std::isfinite(std::abs(z)); })) {
    throw Error(ErrorCode::kInvalidArgument,
                "structure constants: non-finite entries");
  }
  theta_ = beta_.map([](Complex z) { return z.imag(); });
  beta_real_ = beta_.map([](Complex z) { return z.real(); });
}

bool StructureConstants::alpha_is_real(double tol) const {
  return alpha_.imag().cwiseAbs().maxCoeff() <= tol;
}

RVector StructureConstants::tau() const {
  RVector t(n());
  for (Eigen::Index l = 0; l < n(); ++l) t(l) = beta_.section(l).trace().real();
  return t;
}

double StructureConstants::gamma_squared() const {
  return alpha_.trace().real() + 0.25 * tau().squaredNorm();
}

double StructureConstants::gamma() const {
  const double g2 = gamma_squared();
  if (g2 < 0.0) {
    throw Error(ErrorCode::kInadmissibleConstants,
                "Tr alpha + |tau|^2/4 = " + std::to_string(g2) +
                    " < 0: no state exists for these constants");
  }
  return std::sqrt(g2);
}

std::vector<CheckResult> ValidationReport::violations() const {
  std::vector<CheckResult> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out),
               [](const CheckResult& c) { return !c.passed; });
  return out;
}

double ValidationReport::residual(const std::string& check) const {
  for (const auto& c : checks)
    if (c.check == check) return c.residual;
  throw Error(ErrorCode::kInvalidArgument, "unknown check: " + check);
}

ValidationReport validate(const StructureConstants& sc, double tol) {
  const Eigen::Index n = sc.n();
  const CMatrix& alpha = sc.alpha();
  const Array3<Complex>& beta = sc.beta();

  const double alpha_res = (alpha - alpha.adjoint()).cwiseAbs().maxCoeff();
  double herm_res = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    const CMatrix s = beta.section(l);
    herm_res = std::max(herm_res, (s - s.adjoint()).cwiseAbs().maxCoeff());
  }

  // Coefficients of I and X_r in (X_j X_k) X_s - X_j (X_k X_s).
  double con1 = 0.0;
  double con2 = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index s = 0; s < n; ++s) {
        Complex c1 = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) {
          c1 += alpha(l, s) * beta(j, k, l) - alpha(j, l) * beta(k, s, l);
        }
        con1 = std::max(con1, std::abs(c1));
        for (Eigen::Index r = 0; r < n; ++r) {
          Complex c2 = (r == s ? alpha(j, k) : 0.0) -
                       (r == j ? alpha(k, s) : 0.0);
          for (Eigen::Index l = 0; l < n; ++l) {
            c2 += beta(j, k, l) * beta(l, s, r) - beta(k, s, l) * beta(j, l, r);
          }
          con2 = std::max(con2, std::abs(c2));
        }
      }
    }
  }

  ValidationReport report;
  for (auto [name, res] : {std::pair{"alpha-symmetry", alpha_res},
                           std::pair{"section-hermitianity", herm_res},
                           std::pair{"con1", con1}, std::pair{"con2", con2}}) {
    report.checks.push_back({name, res, res <= tol});
  }
  return report;
}

AffineOperatorVector reduce_quadratic(const StructureConstants& sc,
                                      const RMatrix& r) {
  const Eigen::Index n = sc.n();
  if (r.rows() != n || r.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "reduce_quadratic: R must be n x n");
  }
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::kInvalidArgument,
                "reduce_quadratic: R must be symmetric");
  }
  const CMatrix rc = r.cast<Complex>();
  AffineOperatorVector out;
  out.constant = CVector::Constant(1, (rc.adjoint() * sc.alpha()).trace());
  out.linear = CMatrix(1, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    out.linear(0, l) = (rc.adjoint() * sc.beta().section(l)).trace();
  }
  return out;
}

RVector norm_bound(const StructureConstants& sc) {
  const double g = sc.gamma();
  return (0.5 * sc.tau().cwiseAbs()).array() + g;
}

StructureConstants shift_constants(const StructureConstants& sc,
                                   const RVector& phi) {
  const Eigen::Index n = sc.n();
  if (phi.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "shift_constants: phi must have length n");
  }
  const CVector phic = phi.cast<Complex>();
  CMatrix alpha = sc.alpha() - sc.beta().dot(phic) -
                  (phi * phi.transpose()).cast<Complex>();
  Array3<Complex> beta = sc.beta();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      beta(j, k, j) += phi(k);
      beta(j, k, k) += phi(j);
    }
  }
  return StructureConstants(std::move(alpha), std::move(beta));
}

CMatrix dot_product(const StructureConstants& sc, const CVector& u) {
  if (u.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "dot_product: length != n");
  }
  return sc.beta().dot(u);
}

CMatrix diamond_product(const StructureConstants& sc, const CVector& u) {
  if (u.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "diamond_product: length != n");
  }
  return sc.beta().diamond(u);
}

CMatrix ccr_matrix(const StructureConstants& sc, const RVector& x) {
  if (x.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "ccr_matrix: length != n");
  }
  return Complex(0.0, 2.0) * sc.theta().dot(x).cast<Complex>();
}

StructureConstants pauli_preset() {
  Array3<Complex> beta(3);
  // Even permutations of (0, 1, 2) carry +1, odd ones -1.
  const int even[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& p : even) {
    beta(p[0], p[1], p[2]) = Complex(0.0, 1.0);
    beta(p[1], p[0], p[2]) = Complex(0.0, -1.0);
  }
  return StructureConstants(CMatrix::Identity(3, 3), std::move(beta));
}

}  // namespace qsm
