#pragma once

#include <string>
#include <vector>

#include "qsm/linalg.hpp"

namespace qsm {

/// Dense n x n x n array with index order (j, k, l).
template <typename Scalar>
class Array3 {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Array3() = default;
  explicit Array3(Eigen::Index n)
      : n_(n), data_(static_cast<std::size_t>(n * n * n), Scalar(0)) {}

  Eigen::Index size() const { return n_; }

  Scalar& operator()(Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return data_[index(j, k, l)];
  }
  const Scalar& operator()(Eigen::Index j, Eigen::Index k,
                           Eigen::Index l) const {
    return data_[index(j, k, l)];
  }

  /// (j, k) -> a(j, k, l): the sections entering the products below.
  Matrix section(Eigen::Index l) const {
    Matrix out(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index k = 0; k < n_; ++k) out(j, k) = (*this)(j, k, l);
    return out;
  }

  /// (k, l) -> a(j, k, l) for fixed first index.
  Matrix leading_slice(Eigen::Index j) const {
    Matrix out(n_, n_);
    for (Eigen::Index k = 0; k < n_; ++k)
      for (Eigen::Index l = 0; l < n_; ++l) out(k, l) = (*this)(j, k, l);
    return out;
  }

  /// (j, l) -> a(j, k, l) for fixed middle index.
  Matrix middle_slice(Eigen::Index k) const {
    Matrix out(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index l = 0; l < n_; ++l) out(j, l) = (*this)(j, k, l);
    return out;
  }

  /// sum_l section(l) * u(l)
  template <typename Vec>
  auto dot(const Vec& u) const {
    using R = decltype(Scalar{} * typename Vec::Scalar{});
    Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic> out =
        Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_, n_);
    for (Eigen::Index l = 0; l < n_; ++l)
      out += section(l).template cast<R>() * R(u(l));
    return out;
  }

  /// [section(1) u, ..., section(n) u]
  template <typename Vec>
  auto diamond(const Vec& u) const {
    using R = decltype(Scalar{} * typename Vec::Scalar{});
    Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic> out(n_, n_);
    for (Eigen::Index l = 0; l < n_; ++l)
      out.col(l) = section(l).template cast<R>() * u.template cast<R>();
    return out;
  }

  template <typename F>
  auto map(F f) const {
    using R = decltype(f(Scalar{}));
    Array3<R> out(n_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
    return out;
  }

  const std::vector<Scalar>& data() const { return data_; }
  std::vector<Scalar>& data() { return data_; }

 private:
  template <typename>
  friend class Array3;

  std::size_t index(Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return static_cast<std::size_t>((j * n_ + k) * n_ + l);
  }

  Eigen::Index n_ = 0;
  std::vector<Scalar> data_;
};

/// Coefficients of X_j X_k = alpha_jk I + sum_l beta_jkl X_l.
///
/// alpha is stored as a complex matrix because shifting the variables of a
/// Pauli-type algebra produces a Hermitian, not real, alpha; the QSDE
/// coefficient synthesis rejects constants whose alpha has an imaginary part.
class StructureConstants {
 public:
  StructureConstants() = default;
  /// Throws kDimensionMismatch when alpha is not n x n with n = beta.size().
  StructureConstants(CMatrix alpha, Array3<Complex> beta);

  Eigen::Index n() const { return alpha_.rows(); }
  const CMatrix& alpha() const { return alpha_; }
  const Array3<Complex>& beta() const { return beta_; }
  /// Theta = Im beta.
  const Array3<double>& theta() const { return theta_; }
  const Array3<double>& beta_real() const { return beta_real_; }

  bool alpha_is_real(double tol = 0.0) const;

  /// tau_l = Tr beta_l (real for Hermitian sections).
  RVector tau() const;
  /// Tr alpha + |tau|^2 / 4. Negative for inadmissible constants.
  double gamma_squared() const;
  /// Radius of the ball that contains every admissible mean vector.
  /// Throws kInadmissibleConstants when gamma_squared() < 0.
  double gamma() const;

 private:
  CMatrix alpha_;
  Array3<Complex> beta_;
  Array3<double> theta_;
  Array3<double> beta_real_;
};

struct CheckResult {
  std::string check;
  double residual = 0.0;
  bool passed = true;
};

struct ValidationReport {
  /// One entry per check: alpha-symmetry, section-hermitianity, con1, con2.
  std::vector<CheckResult> checks;

  std::vector<CheckResult> violations() const;
  bool ok() const { return violations().empty(); }
  double residual(const std::string& check) const;
};

inline constexpr double kDefaultValidationTol = 1e-10;

/// Hermitian alpha and beta sections, and the two associativity constraints.
ValidationReport validate(const StructureConstants& sc,
                          double tol = kDefaultValidationTol);

/// c I + L X for a vector of operators (or a scalar when rows() == 1).
struct AffineOperatorVector {
  CVector constant;
  CMatrix linear;

  Eigen::Index rows() const { return constant.size(); }
  /// constant + linear * mu, the expectation for a state with mean mu.
  CVector expectation(const CVector& mu) const {
    return constant + linear * mu;
  }
};

/// X^T R X = <R, alpha>_F + sum_l <R, beta_l>_F X_l for symmetric R.
AffineOperatorVector reduce_quadratic(const StructureConstants& sc,
                                      const RMatrix& r);

/// Upper bounds |tau_k| / 2 + gamma on the operator norms of the variables.
RVector norm_bound(const StructureConstants& sc);

/// Constants of the translated variables X + phi.
StructureConstants shift_constants(const StructureConstants& sc,
                                   const RVector& phi);

CMatrix dot_product(const StructureConstants& sc, const CVector& u);
CMatrix diamond_product(const StructureConstants& sc, const CVector& u);

/// [X, X^T] = 2i Theta . x, evaluated at a real vector x.
CMatrix ccr_matrix(const StructureConstants& sc, const RVector& x);

/// alpha = I_3, beta = i Theta with the Levi-Civita symbol.
StructureConstants pauli_preset();

}  // namespace qsm
