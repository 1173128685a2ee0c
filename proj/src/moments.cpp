#include "qsm/moments.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "qsm/errors.hpp"

namespace qsm {

EntireFunction EntireFunction::polynomial(std::vector<Complex> coefficients) {
  if (coefficients.empty()) coefficients.push_back(0.0);
  EntireFunction f;
  f.kind_ = Kind::kPolynomial;
  f.coefficients_ = std::move(coefficients);
  return f;
}

EntireFunction EntireFunction::exponential(Complex rate) {
  EntireFunction f;
  f.kind_ = Kind::kExponential;
  f.rate_ = rate;
  return f;
}

EntireFunction EntireFunction::parse(std::string_view tag) {
  if (tag == "exp_i") return exp_i();
  constexpr std::string_view kPoly = "poly:";
  if (tag.substr(0, kPoly.size()) == kPoly) {
    const auto body = tag.substr(kPoly.size());
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig,
                  "bad polynomial tag '" + std::string(tag) + "': " + e.what());
    }
    if (!parsed.is_array()) {
      throw Error(ErrorCode::kConfig, "polynomial tag needs a list");
    }
    std::vector<Complex> coeffs;
    for (const auto& c : parsed) {
      if (!c.is_number()) {
        throw Error(ErrorCode::kConfig, "polynomial coefficients must be real");
      }
      coeffs.emplace_back(c.get<double>(), 0.0);
    }
    return polynomial(std::move(coeffs));
  }
  throw Error(ErrorCode::kConfig,
              "unknown function tag '" + std::string(tag) + "'");
}

std::string EntireFunction::tag() const {
  if (kind_ == Kind::kExponential) {
    if (rate_ == Complex(0.0, 1.0)) return "exp_i";
    std::ostringstream os;
    os.precision(17);
    os << "exp:" << rate_.real() << ',' << rate_.imag();
    return os.str();
  }
  nlohmann::json list = nlohmann::json::array();
  for (const Complex& c : coefficients_) list.push_back(c.real());
  return "poly:" + list.dump();
}

Complex EntireFunction::operator()(Complex z) const {
  if (kind_ == Kind::kExponential) return std::exp(rate_ * z);
  Complex acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it)
    acc = acc * z + *it;
  return acc;
}

CMatrix EntireFunction::operator()(const CMatrix& z) const {
  if (kind_ == Kind::kExponential) return linalg::expm(CMatrix(rate_ * z));
  const auto n = z.rows();
  CMatrix acc = CMatrix::Zero(n, n);
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    acc = acc * z;
    acc.diagonal().array() += *it;
  }
  return acc;
}

Complex EntireFunction::taylor_coefficient(int k) const {
  if (k < 0) return 0.0;
  if (kind_ == Kind::kPolynomial) {
    return static_cast<std::size_t>(k) < coefficients_.size()
               ? coefficients_[static_cast<std::size_t>(k)]
               : Complex(0.0);
  }
  return std::pow(rate_, k) / std::tgamma(static_cast<double>(k) + 1.0);
}

bool EntireFunction::has_real_coefficients() const {
  if (kind_ == Kind::kExponential) return rate_.imag() == 0.0;
  for (const Complex& c : coefficients_)
    if (c.imag() != 0.0) return false;
  return true;
}

CMatrix bordered_matrix(const StructureConstants& sc, const CVector& u) {
  const Eigen::Index n = sc.n();
  if (u.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "bordered_matrix: u size");
  }
  CMatrix g = CMatrix::Zero(n + 1, n + 1);
  g.block(0, 1, 1, n) = u.transpose();
  g.block(1, 0, n, 1) = sc.alpha() * u;
  g.block(1, 1, n, n) = sc.beta().diamond(u);
  return g;
}

AffineOperatorVector reduce_entire(const StructureConstants& sc,
                                   const EntireFunction& f, const CVector& u) {
  const CMatrix value = f(bordered_matrix(sc, u));
  AffineOperatorVector out;
  out.constant = CVector::Constant(1, value(0, 0));
  out.linear = value.block(0, 1, 1, sc.n());
  return out;
}

Complex qcf(const StructureConstants& sc, const RVector& mu, const RVector& u) {
  if (mu.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "qcf: mu size");
  }
  const AffineOperatorVector red =
      reduce_entire(sc, EntireFunction::exp_i(), u.cast<Complex>());
  return red.expectation(mu.cast<Complex>())(0);
}

Complex multi_moment(const CoefficientSet& coeffs, const MeanFunction& mean_fn,
                     const MomentQuery& query) {
  const std::size_t q = query.order();
  const Eigen::Index n = coeffs.n();
  if (q == 0) return 1.0;
  if (query.directions.size() != q) {
    throw Error(ErrorCode::kDimensionMismatch,
                "multi_moment: one direction per time is required");
  }
  for (std::size_t k = 0; k < q; ++k) {
    if (query.directions[k].size() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "multi_moment: direction has wrong length");
    }
    if (k > 0 && query.times[k] < query.times[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "multi_moment: times must be nondecreasing");
    }
  }
  const StructureConstants& sc = coeffs.system.sc;
  const CMatrix alpha = sc.alpha();
  const CVector mu1 = mean_fn(query.times[0]).cast<Complex>();

  // For step k (0-based, k >= 1) between t_{k-1} and t_k:
  //   next direction  u~ = transfer[k] v
  //   weight          w  = v^T weight_col[k]
  std::vector<CMatrix> transfer(q);
  std::vector<CVector> weight_col(q);
  for (std::size_t k = 1; k < q; ++k) {
    const double dt = query.times[k] - query.times[k - 1];
    const CMatrix e = linalg::expm(RMatrix(dt * coeffs.a)).cast<Complex>();
    const CVector psi_b = (linalg::psi(coeffs.a, dt) * coeffs.b).cast<Complex>();
    const CVector& prev = query.directions[k - 1];
    transfer[k] = sc.beta().diamond(prev).transpose() * e.transpose() +
                  prev * psi_b.transpose();
    weight_col[k] = e * alpha * prev;
  }

  // prefix[k] = M_k(t_1..t_k; u_1..u_k); prefix[0] = 1.
  std::vector<Complex> prefix(q + 1);
  prefix[0] = 1.0;
  for (std::size_t order = 1; order <= q; ++order) {
    // Unroll M_order(...; u_1..u_{order-1}, v) down to M_1.
    CVector v = query.directions[order - 1];
    Complex acc = 0.0;
    for (std::size_t k = order - 1; k >= 1; --k) {
      acc += v.cwiseProduct(weight_col[k]).sum() * prefix[k - 1];
      v = transfer[k] * v;
    }
    acc += v.cwiseProduct(mu1).sum();
    prefix[order] = acc;
  }
  return prefix[q];
}

CMatrix two_point_cov(const CoefficientSet& coeffs, const MeanFunction& mean_fn,
                      double s, double t) {
  if (t < s) {
    throw Error(ErrorCode::kInvalidArgument,
                "two_point_cov requires t >= s; use the transpose relation");
  }
  const RVector mu_s = mean_fn(s);
  const CMatrix e = linalg::expm(RMatrix((t - s) * coeffs.a)).cast<Complex>();
  return e * covariance_from_mean(coeffs.system.sc, mu_s);
}

CMatrix stationary_cov(const CoefficientSet& coeffs, const CMatrix& gamma,
                       double lag) {
  if (lag >= 0.0) {
    return linalg::expm(RMatrix(lag * coeffs.a)).cast<Complex>() * gamma;
  }
  return gamma *
         linalg::expm(RMatrix(-lag * coeffs.a.transpose())).cast<Complex>();
}

double growth_rate(const CoefficientSet& coeffs, const RVector& mu_inf,
                   const std::vector<GrowthTerm>& terms) {
  const auto report = linalg::is_hurwitz(coeffs.a);
  if (!report.hurwitz) {
    throw Error(ErrorCode::kNotHurwitz,
                "growth_rate: A is not Hurwitz, no limit mean exists");
  }
  const StructureConstants& sc = coeffs.system.sc;
  if (mu_inf.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "growth_rate: mu size");
  }
  Complex total = 0.0;
  for (const GrowthTerm& term : terms) {
    if (!term.f.has_real_coefficients()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "growth_rate: functions must have real coefficients");
    }
    total += reduce_entire(sc, term.f, term.u.cast<Complex>())
                 .expectation(mu_inf.cast<Complex>())(0);
  }
  return total.real();
}

double quadratic_growth_rate(const StructureConstants& sc, const RMatrix& r,
                             const RVector& mu_inf) {
  return reduce_quadratic(sc, r).expectation(mu_inf.cast<Complex>())(0).real();
}

}  // namespace qsm
