#include "qsm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qsm/errors.hpp"

namespace qsm {
namespace {

RVector pack(const CMatrix& m) {
  const Eigen::Index size = m.size();
  RVector v(2 * size);
  v.head(size) = m.real().reshaped();
  v.tail(size) = m.imag().reshaped();
  return v;
}

CMatrix unpack(const RVector& v, Eigen::Index n) {
  const Eigen::Index size = n * n;
  CMatrix m(n, n);
  m.real() = v.head(size).reshaped(n, n);
  m.imag() = v.tail(size).reshaped(n, n);
  return m;
}

CMatrix resolvent(const RMatrix& a, double omega) {
  const auto n = a.rows();
  const CMatrix shifted = Complex(0.0, omega) * CMatrix::Identity(n, n) -
                          a.cast<Complex>();
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  if (!(std::abs(lu.determinant()) > 0.0)) {
    throw Error(ErrorCode::kNotHurwitz, "i w I - A is singular");
  }
  return lu.inverse();
}

void require_hurwitz(const RMatrix& a, const char* what) {
  const auto report = linalg::is_hurwitz(a);
  if (!report.hurwitz) {
    throw Error(ErrorCode::kNotHurwitz,
                std::string(what) + ": A is not Hurwitz (abscissa " +
                    std::to_string(report.abscissa) + ")");
  }
}

}  // namespace

SystemSpec make_system(StructureConstants sc, RVector energy, RMatrix coupling,
                       RVector offset, double tol) {
  const Eigen::Index n = sc.n();
  const Eigen::Index m = coupling.rows();
  if (m == 0 || m % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "number of field channels m must be even and positive, got " +
                    std::to_string(m));
  }
  if (energy.size() != n || coupling.cols() != n || offset.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "plant: E must have n entries, M must be m x n, N m entries");
  }
  const ValidationReport report = validate(sc, tol);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "structure constants fail validation:";
    for (const auto& v : report.violations())
      msg << ' ' << v.check << '=' << v.residual;
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  return {std::move(sc), std::move(energy), std::move(coupling),
          std::move(offset)};
}

RMatrix symplectic_j(Eigen::Index m) {
  if (m % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "J needs an even dimension");
  }
  const Eigen::Index h = m / 2;
  RMatrix j = RMatrix::Zero(m, m);
  j.topRightCorner(h, h) = RMatrix::Identity(h, h);
  j.bottomLeftCorner(h, h) = -RMatrix::Identity(h, h);
  return j;
}

RMatrix CoefficientSet::dispersion(const RVector& x) const {
  return 2.0 * system.sc.theta().dot(x) * system.coupling.transpose();
}

CoefficientSet synthesize(const SystemSpec& spec) {
  const StructureConstants& sc = spec.sc;
  if (!sc.alpha_is_real(1e-14)) {
    throw Error(ErrorCode::kInvalidArgument,
                "QSDE coefficients need a real alpha");
  }
  const Eigen::Index n = spec.n();
  const Eigen::Index m = spec.m();
  if (m % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "m must be even");
  }
  if (spec.energy.size() != n || spec.coupling.cols() != n ||
      spec.offset.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "synthesize: plant sizes");
  }
  const RMatrix& mm = spec.coupling;
  const RMatrix j = symplectic_j(m);
  const RMatrix alpha = sc.alpha().real();
  const Array3<double>& theta = sc.theta();
  const Array3<double>& beta_re = sc.beta_real();

  CoefficientSet out;
  const RVector hamiltonian_dir =
      spec.energy + mm.transpose() * j * spec.offset;
  out.a = 2.0 * theta.diamond(hamiltonian_dir);
  out.b = RVector::Zero(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const RMatrix theta_l_mt = theta.section(l) * mm.transpose();
    // The middle factor uses the leading slices (l, ., .) of Theta and
    // Re beta, which differ from the sections unless the constants are
    // cyclically symmetric.
    out.a += 2.0 * theta_l_mt *
             (mm * theta.leading_slice(l) + j * mm * beta_re.leading_slice(l));
    out.b += 2.0 * theta_l_mt * j * mm * alpha.col(l);
  }
  out.j = j;
  out.omega = CMatrix::Identity(m, m) + Complex(0.0, 1.0) * j.cast<Complex>();
  out.system = spec;
  return out;
}

CMatrix diffusion_matrix(const SystemSpec& spec, const RVector& mu) {
  const StructureConstants& sc = spec.sc;
  const Eigen::Index n = sc.n();
  const Eigen::Index m = spec.m();
  if (mu.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "diffusion_matrix: mu size");
  }
  const CMatrix omega =
      CMatrix::Identity(m, m) + Complex(0.0, 1.0) * symplectic_j(m).cast<Complex>();
  const CMatrix mt = spec.coupling.transpose().cast<Complex>();
  const CMatrix middle = mt * omega * mt.transpose();
  // E Xi_jk = alpha_jk + (beta . mu)_jk
  const CMatrix second = sc.alpha() + sc.beta().dot(mu.cast<Complex>());
  std::vector<CMatrix> theta(static_cast<std::size_t>(n));
  for (Eigen::Index l = 0; l < n; ++l)
    theta[static_cast<std::size_t>(l)] = sc.theta().section(l).cast<Complex>();
  CMatrix v = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const CMatrix left = theta[static_cast<std::size_t>(a)] * middle;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (second(a, c) == Complex(0.0)) continue;
      v += second(a, c) * left * theta[static_cast<std::size_t>(c)];
    }
  }
  return linalg::hermitize(-4.0 * v);
}

CMatrix covariance_from_mean(const StructureConstants& sc, const RVector& mu) {
  if (mu.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance_from_mean: size");
  }
  return sc.alpha() + sc.beta().dot(mu.cast<Complex>()) -
         (mu * mu.transpose()).cast<Complex>();
}

double admissible_ball_excess(const StructureConstants& sc, const RVector& mu) {
  return (mu - 0.5 * sc.tau()).norm() - sc.gamma();
}

std::vector<std::string> admissibility_warnings(const StructureConstants& sc,
                                                const MomentState& state,
                                                double tol) {
  std::vector<std::string> out;
  if (state.mu.size() != sc.n() || state.cov.rows() != sc.n() ||
      state.cov.cols() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial state sizes");
  }
  const double herm = (state.cov - state.cov.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) {
    out.push_back("initial covariance is not Hermitian (" +
                  std::to_string(herm) + ")");
  }
  const double floor = linalg::min_eigenvalue_hermitian(state.cov);
  if (floor < -tol * (1.0 + state.cov.norm())) {
    out.push_back("initial covariance is indefinite (min eigenvalue " +
                  std::to_string(floor) + ")");
  }
  const double mismatch =
      (state.cov - covariance_from_mean(sc, state.mu)).cwiseAbs().maxCoeff();
  if (mismatch > tol) {
    out.push_back(
        "initial covariance differs from alpha + beta.mu - mu mu^T by " +
        std::to_string(mismatch));
  }
  return out;
}

MeanFunction closed_form_mean(const CoefficientSet& coeffs, RVector mu0,
                              double t0) {
  if (mu0.size() != coeffs.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "mean: mu0 size");
  }
  return [a = coeffs.a, b = coeffs.b, mu0 = std::move(mu0), t0](double t) {
    return RVector(linalg::expm(RMatrix((t - t0) * a)) * mu0 +
                   linalg::psi(a, t - t0) * b);
  };
}

MeanTrajectory mean_trajectory(const CoefficientSet& coeffs,
                               const RVector& mu0,
                               const std::vector<double>& grid,
                               MeanMethod method,
                               const ode::StepPolicy& policy) {
  if (grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mean_trajectory: empty grid");
  }
  ode::require_increasing(grid, "mean_trajectory");
  MeanTrajectory out;
  out.times = grid;
  if (method == MeanMethod::kClosedForm) {
    const MeanFunction mean = closed_form_mean(coeffs, mu0, grid.front());
    for (double t : grid) out.mu.push_back(mean(t));
    return out;
  }
  ode::OdeProblem problem;
  problem.dimension = coeffs.n();
  problem.rhs = [&coeffs](double, const RVector& y) {
    return RVector(coeffs.a * y + coeffs.b);
  };
  problem.t0 = grid.front();
  problem.y0 = mu0;
  problem.t_end = grid.back();
  problem.output_times = grid;
  problem.policy = policy;
  out.mu = ode::integrate(problem).states;
  return out;
}

std::vector<MomentState> covariance_trajectory(const CoefficientSet& coeffs,
                                               const MomentState& state0,
                                               const std::vector<double>& grid,
                                               const ode::StepPolicy& policy,
                                               MeanFunction mean_fn) {
  const Eigen::Index n = coeffs.n();
  if (state0.cov.rows() != n || state0.cov.cols() != n ||
      state0.mu.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance_trajectory: sizes");
  }
  if (grid.empty() || grid.front() < state0.t) {
    throw Error(ErrorCode::kInvalidArgument,
                "covariance_trajectory: grid must start at or after state0.t");
  }
  ode::require_increasing(grid, "covariance_trajectory");
  if (!mean_fn) mean_fn = closed_form_mean(coeffs, state0.mu, state0.t);

  const CMatrix a = coeffs.a.cast<Complex>();
  ode::OdeProblem problem;
  problem.dimension = 2 * n * n;
  problem.rhs = [&](double t, const RVector& y) {
    const CMatrix cov = unpack(y, n);
    const CMatrix dcov = a * cov + cov * a.transpose() +
                         diffusion_matrix(coeffs.system, mean_fn(t));
    return pack(dcov);
  };
  problem.project = [n](RVector& y) { y = pack(linalg::hermitize(unpack(y, n))); };
  problem.t0 = state0.t;
  problem.y0 = pack(state0.cov);
  problem.t_end = grid.back();
  problem.output_times = grid;
  problem.policy = policy;
  const ode::Trajectory traj = ode::integrate(problem);

  std::vector<MomentState> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out.push_back({traj.times[i], mean_fn(traj.times[i]),
                   unpack(traj.states[i], n)});
  }
  return out;
}

InvariantState invariant_state(const CoefficientSet& coeffs) {
  require_hurwitz(coeffs.a, "invariant_state");
  InvariantState out;
  out.mu = -coeffs.a.partialPivLu().solve(coeffs.b);
  out.upsilon = diffusion_matrix(coeffs.system, out.mu);
  out.gamma = linalg::solve_lyapunov(coeffs.a, out.upsilon);
  out.gamma_algebraic = covariance_from_mean(coeffs.system.sc, out.mu);
  const CMatrix a = coeffs.a.cast<Complex>();
  out.ale_residual =
      (a * out.gamma + out.gamma * a.transpose() + out.upsilon).norm();
  out.route_discrepancy =
      (out.gamma - out.gamma_algebraic).cwiseAbs().maxCoeff();
  return out;
}

CMatrix spectral_density(const CoefficientSet& coeffs, const CMatrix& gamma,
                         double omega) {
  require_hurwitz(coeffs.a, "spectral_density");
  const CMatrix left = resolvent(coeffs.a, omega);
  // (iwI + A^T)^{-1} = -((-iw)I - A)^{-T}
  const CMatrix right = -resolvent(coeffs.a, -omega).transpose();
  return left * gamma - gamma * right;
}

CMatrix spectral_density_from_noise(const CoefficientSet& coeffs,
                                    const CMatrix& upsilon, double omega) {
  require_hurwitz(coeffs.a, "spectral_density");
  const CMatrix left = resolvent(coeffs.a, omega);
  const CMatrix right = -resolvent(coeffs.a, -omega).transpose();
  return -(left * upsilon * right);
}

PauliStability pauli_stability(const RMatrix& coupling) {
  if (coupling.cols() != 3) {
    throw Error(ErrorCode::kDimensionMismatch,
                "pauli_stability: M must have 3 columns");
  }
  const StructureConstants pauli = pauli_preset();
  const RMatrix mtm = coupling.transpose() * coupling;
  PauliStability out;
  out.lambda = RMatrix::Zero(3, 3);
  for (Eigen::Index l = 0; l < 3; ++l) {
    const RMatrix t = pauli.theta().section(l);
    out.lambda -= t * mtm * t;
  }
  out.lambda = linalg::symmetrize(out.lambda);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(out.lambda, Eigen::EigenvaluesOnly);
  out.spectrum = eig.eigenvalues();
  if (coupling.size() > 0) {
    Eigen::JacobiSVD<RMatrix> svd(coupling);
    svd.setThreshold(1e-10);
    out.rank = svd.rank();
  }
  out.hurwitz_guarantee = out.rank >= 2;
  return out;
}

}  // namespace qsm
