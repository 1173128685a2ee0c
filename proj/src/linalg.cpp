#include "qsm/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "qsm/errors.hpp"

namespace qsm::linalg {
namespace {

template <typename Mat>
void require_square(const Mat& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": matrix is not square (" +
                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    ")");
  }
}

// Pade coefficients b_0..b_m for the [m/m] approximant of exp.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// Largest 1-norms for which each degree keeps the backward error below
// unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <typename Mat, std::size_t N>
Mat pade_low(const Mat& a, const std::array<double, N>& c) {
  const auto n = a.rows();
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  Mat even = c[0] * ident;
  Mat odd = c[1] * ident;
  Mat power = ident;
  for (std::size_t k = 2; k + 1 < N + 1; k += 2) {
    power = power * a2;
    even += c[k] * power;
    if (k + 1 < N) odd += c[k + 1] * power;
  }
  const Mat u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

template <typename Mat>
Mat pade13(const Mat& a) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                      b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Mat u = a * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

template <typename Mat>
Mat expm_impl(const Mat& a) {
  require_square(a, "expm");
  if (a.size() == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) {
    throw Error(ErrorCode::kInvalidArgument, "expm: non-finite entries");
  }
  if (norm1 <= kTheta3) return pade_low(a, kPade3);
  if (norm1 <= kTheta5) return pade_low(a, kPade5);
  if (norm1 <= kTheta7) return pade_low(a, kPade7);
  if (norm1 <= kTheta9) return pade_low(a, kPade9);
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  }
  Mat result = pade13(Mat(a / std::ldexp(1.0, squarings)));
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

RMatrix sign_function(RMatrix z) {
  const auto n = z.rows();
  constexpr int kMaxIterations = 100;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::PartialPivLU<RMatrix> lu(z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw Error(ErrorCode::kDesignInfeasible,
                  "Hamiltonian matrix has eigenvalues on the imaginary axis");
    }
    const double scale = std::pow(det, -1.0 / static_cast<double>(n));
    const RMatrix next = 0.5 * (scale * z + lu.inverse() / scale);
    const double change = (next - z).lpNorm<1>();
    z = next;
    if (change <= 1e-13 * z.lpNorm<1>()) return z;
  }
  throw Error(ErrorCode::kDesignInfeasible,
              "matrix sign iteration did not converge");
}

}  // namespace

RMatrix expm(const RMatrix& a) { return expm_impl(a); }
CMatrix expm(const CMatrix& a) { return expm_impl(a); }

RMatrix psi(const RMatrix& a, double t) {
  require_square(a, "psi");
  const auto n = a.rows();
  RMatrix block = RMatrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = t * a;
  block.topRightCorner(n, n) = t * RMatrix::Identity(n, n);
  return expm(block).topRightCorner(n, n);
}

HurwitzReport is_hurwitz(const RMatrix& a) {
  require_square(a, "is_hurwitz");
  if (a.size() == 0) return {true, -std::numeric_limits<double>::infinity()};
  Eigen::EigenSolver<RMatrix> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "eigenvalue solver failed");
  }
  const double abscissa = solver.eigenvalues().real().maxCoeff();
  return {abscissa < 0.0, abscissa};
}

CMatrix solve_lyapunov(const RMatrix& a, const CMatrix& q) {
  require_square(a, "solve_lyapunov");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "solve_lyapunov: Q does not match A");
  }
  const HurwitzReport report = is_hurwitz(a);
  if (!report.hurwitz) {
    throw Error(ErrorCode::kNotHurwitz,
                "solve_lyapunov: A is not Hurwitz (abscissa " +
                    std::to_string(report.abscissa) + ")");
  }
  const auto n = a.rows();
  // A = U T U^*, A^T = A^* = U T^* U^*, so with Y = U^* X U:
  //   T Y + Y T^* = -U^* Q U.
  Eigen::ComplexSchur<CMatrix> schur(a.cast<Complex>());
  const CMatrix& t = schur.matrixT();
  const CMatrix& u = schur.matrixU();
  const CMatrix rhs = -(u.adjoint() * q * u);
  CMatrix y = CMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    CVector col = rhs.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) {
      col -= std::conj(t(j, k)) * y.col(k);
    }
    CMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(col);
  }
  return hermitize(u * y * u.adjoint());
}

RMatrix solve_lyapunov(const RMatrix& a, const RMatrix& q) {
  return symmetrize(solve_lyapunov(a, CMatrix(q.cast<Complex>())).real());
}

RMatrix are_gain(const AreProblem& pr, const RMatrix& p) {
  const RMatrix numerator = p * pr.c.transpose() + pr.b * pr.d.transpose();
  return pr.f.llt().solve(numerator.transpose()).transpose();
}

RMatrix are_residual(const AreProblem& pr, const RMatrix& p) {
  const RMatrix cross = p * pr.c.transpose() + pr.b * pr.d.transpose();
  return pr.a * p + p * pr.a.transpose() + pr.sigma -
         cross * pr.f.llt().solve(cross.transpose());
}

double are_scaled_residual(const AreProblem& pr, const RMatrix& p) {
  const RMatrix cross = p * pr.c.transpose() + pr.b * pr.d.transpose();
  const double scale =
      std::max({1.0, 2.0 * (pr.a * p).norm(), pr.sigma.norm(),
                (cross * pr.f.llt().solve(cross.transpose())).norm()});
  return are_residual(pr, p).norm() / scale;
}

namespace {

void check_are_dims(const AreProblem& pr) {
  const auto n = pr.a.rows();
  const auto r = pr.c.rows();
  const auto m = pr.b.cols();
  const bool ok = pr.a.cols() == n && pr.c.cols() == n &&
                  pr.sigma.rows() == n && pr.sigma.cols() == n &&
                  pr.b.rows() == n && pr.d.rows() == r && pr.d.cols() == m &&
                  pr.f.rows() == r && pr.f.cols() == r;
  if (!ok) {
    throw Error(ErrorCode::kDimensionMismatch, "solve_are: inconsistent sizes");
  }
  Eigen::LLT<RMatrix> llt(pr.f);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kRankDeficient,
                "solve_are: F is not positive definite");
  }
}

// Gain with A - K C Hurwitz via the Bass construction on the dual pair,
// or an empty matrix if the pair is not observable enough for it.
RMatrix stabilizing_seed(const AreProblem& pr) {
  const auto n = pr.a.rows();
  const auto r = pr.c.rows();
  const HurwitzReport open_loop = is_hurwitz(pr.a);
  if (open_loop.hurwitz) return RMatrix::Zero(n, r);
  // -(A^T + shift I) must be Hurwitz; |A|_F bounds every |Re lambda|.
  const double shift = pr.a.norm() + 1.0;
  const RMatrix shifted =
      -(pr.a.transpose() + shift * RMatrix::Identity(n, n));
  const RMatrix z =
      solve_lyapunov(shifted, RMatrix(2.0 * pr.c.transpose() * pr.c));
  Eigen::LLT<RMatrix> llt(z);
  if (llt.info() != Eigen::Success) return {};
  RMatrix gain = llt.solve(pr.c.transpose());
  if (!is_hurwitz(pr.a - gain * pr.c).hurwitz) return {};
  return gain;
}

}  // namespace

RMatrix solve_are_invariant_subspace(const AreProblem& pr) {
  check_are_dims(pr);
  const auto n = pr.a.rows();
  Eigen::LLT<RMatrix> f_llt(pr.f);
  const RMatrix f_inv_c = f_llt.solve(pr.c);
  const RMatrix cross = pr.b * pr.d.transpose();
  const RMatrix a_bar = pr.a - cross * f_inv_c;
  const RMatrix q_bar = pr.sigma - cross * f_llt.solve(cross.transpose());
  const RMatrix g = pr.c.transpose() * f_inv_c;

  // Control-form Hamiltonian for A_bar^T X + X A_bar - X G X + Q_bar = 0
  // written in terms of the transposed drift.
  RMatrix ham(2 * n, 2 * n);
  ham << a_bar.transpose(), -g, -symmetrize(q_bar), -a_bar;
  const RMatrix w = sign_function(ham);
  RMatrix lhs(2 * n, n);
  lhs << w.topRightCorner(n, n),
      w.bottomRightCorner(n, n) + RMatrix::Identity(n, n);
  RMatrix rhs(2 * n, n);
  rhs << -(w.topLeftCorner(n, n) + RMatrix::Identity(n, n)),
      -w.bottomLeftCorner(n, n);
  Eigen::ColPivHouseholderQR<RMatrix> qr(lhs);
  if (qr.rank() < n) {
    throw Error(ErrorCode::kDesignInfeasible,
                "stable invariant subspace is not a graph subspace");
  }
  return symmetrize(qr.solve(rhs));
}

RMatrix solve_are_newton(const AreProblem& pr, const RMatrix& initial_gain) {
  check_are_dims(pr);
  RMatrix gain = initial_gain;
  RMatrix p = RMatrix::Zero(pr.a.rows(), pr.a.rows());
  const RMatrix cross = pr.b * pr.d.transpose();
  constexpr int kMaxIterations = 200;
  for (int it = 0; it < kMaxIterations; ++it) {
    const RMatrix closed = pr.a - gain * pr.c;
    const RMatrix forcing = pr.sigma - gain * cross.transpose() -
                            cross * gain.transpose() +
                            gain * pr.f * gain.transpose();
    RMatrix next;
    try {
      next = solve_lyapunov(closed, symmetrize(forcing));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotHurwitz) throw;
      throw Error(ErrorCode::kDesignInfeasible,
                  "Newton-Kleinman lost stability of A - K C");
    }
    const double change = (next - p).norm();
    p = next;
    gain = are_gain(pr, p);
    if (it > 0 && change <= 1e-14 * std::max(1.0, p.norm())) break;
  }
  return p;
}

AreSolution solve_are(const AreProblem& pr) {
  check_are_dims(pr);
  const RMatrix p_subspace = solve_are_invariant_subspace(pr);
  RMatrix seed = stabilizing_seed(pr);
  if (seed.size() == 0) seed = are_gain(pr, p_subspace);
  const RMatrix p_newton = solve_are_newton(pr, seed);

  AreSolution sol;
  sol.method_discrepancy =
      (p_subspace - p_newton).norm() / std::max(1.0, p_newton.norm());
  if (sol.method_discrepancy > 1e-6) {
    throw Error(ErrorCode::kDesignInfeasible,
                "Riccati solvers disagree (relative distance " +
                    std::to_string(sol.method_discrepancy) + ")");
  }
  const double res_newton = are_scaled_residual(pr, p_newton);
  const double res_subspace = are_scaled_residual(pr, p_subspace);
  sol.p = res_newton <= res_subspace ? p_newton : p_subspace;
  sol.residual = std::min(res_newton, res_subspace);
  sol.gain = are_gain(pr, sol.p);
  sol.closed_loop_abscissa = is_hurwitz(pr.a - sol.gain * pr.c).abscissa;
  if (!(sol.closed_loop_abscissa < 0.0)) {
    throw Error(ErrorCode::kDesignInfeasible,
                "Riccati solution is not stabilizing");
  }
  return sol;
}

double min_eigenvalue_hermitian(const CMatrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitize(h),
                                                Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double min_eigenvalue_symmetric(const RMatrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(symmetrize(s),
                                                Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

RMatrix symmetrize(const RMatrix& s) { return 0.5 * (s + s.transpose()); }

CMatrix hermitize(const CMatrix& h) { return 0.5 * (h + h.adjoint()); }

}  // namespace qsm::linalg
