#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qsm/algebra.hpp"
#include "qsm/dynamics.hpp"

namespace qsm {

/// An entire function known both by its Maclaurin coefficients and by a
/// matrix evaluator. Two families are supported: polynomials, and
/// z -> exp(rate z) for a complex rate.
class EntireFunction {
 public:
  static EntireFunction polynomial(std::vector<Complex> coefficients);
  static EntireFunction exponential(Complex rate);
  /// z -> exp(iz), the kernel of the quasi-characteristic function.
  static EntireFunction exp_i() { return exponential(Complex(0.0, 1.0)); }

  /// Parses the config tags `poly:[c0,c1,...]` and `exp_i`.
  static EntireFunction parse(std::string_view tag);
  std::string tag() const;

  Complex operator()(Complex z) const;
  /// Horner for polynomials, scaling-and-squaring exp otherwise.
  CMatrix operator()(const CMatrix& z) const;

  /// f^(k)(0) / k!
  Complex taylor_coefficient(int k) const;
  bool has_real_coefficients() const;
  bool is_exponential() const { return kind_ == Kind::kExponential; }
  Complex rate() const { return rate_; }

 private:
  enum class Kind { kPolynomial, kExponential };

  Kind kind_ = Kind::kPolynomial;
  std::vector<Complex> coefficients_;
  Complex rate_ = 0.0;
};

/// [[0, u^T], [alpha u, beta <> u]], of size n + 1.
CMatrix bordered_matrix(const StructureConstants& sc, const CVector& u);

/// f(u^T X) = c0 I + c^T X, read off the first row of f(bordered_matrix).
AffineOperatorVector reduce_entire(const StructureConstants& sc,
                                   const EntireFunction& f, const CVector& u);

/// E exp(i u^T X) for a state with mean mu.
Complex qcf(const StructureConstants& sc, const RVector& mu, const RVector& u);

struct MomentQuery {
  std::vector<double> times;
  std::vector<CVector> directions;

  std::size_t order() const { return times.size(); }
};

/// E(u_q^T X(t_q) ... u_1^T X(t_1)) for t_1 <= ... <= t_q via the
/// second-order recurrence. Prefix moments are memoized, so the cost is
/// O(q^2 n^2) after one exponential per time step.
Complex multi_moment(const CoefficientSet& coeffs, const MeanFunction& mean_fn,
                     const MomentQuery& query);

/// cov(X(t), X(s)) = e^{(t-s)A} (alpha + beta.mu(s) - mu(s) mu(s)^T), t >= s.
CMatrix two_point_cov(const CoefficientSet& coeffs, const MeanFunction& mean_fn,
                      double s, double t);

/// Stationary covariance function at lag t - s, both signs of the lag.
CMatrix stationary_cov(const CoefficientSet& coeffs, const CMatrix& gamma,
                       double lag);

struct GrowthTerm {
  EntireFunction f;
  RVector u;
};

/// Long-run average of E sum_k f_k(u_k^T X(t)). Requires Hurwitz A and
/// real-coefficient functions.
double growth_rate(const CoefficientSet& coeffs, const RVector& mu_inf,
                   const std::vector<GrowthTerm>& terms);

/// Long-run average of E X^T R X from the quadratic reduction.
double quadratic_growth_rate(const StructureConstants& sc, const RMatrix& r,
                             const RVector& mu_inf);

}  // namespace qsm
