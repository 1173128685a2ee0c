#include "qsm/filter.hpp"

#include <cmath>

#include "qsm/errors.hpp"

namespace qsm {
namespace {

RVector pack(const RMatrix& p) { return p.reshaped(); }

RMatrix unpack(const RVector& v, Eigen::Index n) { return v.reshaped(n, n); }

void check_gain(const RMatrix& gain, Eigen::Index n, Eigen::Index r) {
  if (gain.rows() != n || gain.cols() != r) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gain must be n x r (" + std::to_string(n) + "x" +
                    std::to_string(r) + ")");
  }
}

void check_p(const RMatrix& p, Eigen::Index n) {
  if (p.rows() != n || p.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "P must be n x n");
  }
}

}  // namespace

MeasurementSpec build_measurement(const SystemSpec& spec, const RMatrix& d) {
  const Eigen::Index m = spec.m();
  if (d.cols() != m || d.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "D must have m = " + std::to_string(m) + " columns");
  }
  if (2 * d.rows() > m) {
    throw Error(ErrorCode::kInvalidArgument,
                "D has more than m/2 rows: the observations cannot commute");
  }
  const RMatrix j = symplectic_j(m);
  const double commutator = (d * j * d.transpose()).cwiseAbs().maxCoeff();
  if (commutator > 1e-12) {
    throw Error(ErrorCode::kNonCommutingMeasurement,
                "D J D^T != 0 (max entry " + std::to_string(commutator) + ")");
  }
  MeasurementSpec out;
  out.d = d;
  out.f = d * d.transpose();
  Eigen::LLT<RMatrix> llt(out.f);
  if (llt.info() != Eigen::Success ||
      llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-12) {
    throw Error(ErrorCode::kRankDeficient, "D D^T is singular");
  }
  out.c = 2.0 * d * j * spec.coupling;
  out.offset = 2.0 * d * j * spec.offset;
  return out;
}

RMatrix sigma_of_mu(const SystemSpec& spec, const RVector& mu) {
  const StructureConstants& sc = spec.sc;
  const Eigen::Index n = sc.n();
  if (mu.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "sigma_of_mu: mu size");
  }
  if (!sc.alpha_is_real(1e-14)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma_of_mu needs a real alpha");
  }
  const RMatrix& mm = spec.coupling;
  const RMatrix mtm = mm.transpose() * mm;
  const RMatrix mtjm = mm.transpose() * symplectic_j(spec.m()) * mm;
  const RMatrix alpha = sc.alpha().real();
  const RMatrix re_part = alpha + sc.beta_real().dot(mu);
  const RMatrix im_part = sc.theta().dot(mu);
  RMatrix sigma = RMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const RMatrix theta_j = sc.theta().section(j);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (re_part(j, k) == 0.0 && im_part(j, k) == 0.0) continue;
      sigma += theta_j * (re_part(j, k) * mtm - im_part(j, k) * mtjm) *
               sc.theta().section(k);
    }
  }
  return linalg::symmetrize(-4.0 * sigma);
}

RMatrix initial_error_covariance(const StructureConstants& sc,
                                 const RVector& mu0) {
  if (mu0.size() != sc.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "P0: mu size");
  }
  return linalg::symmetrize(sc.alpha().real() + sc.beta_real().dot(mu0) -
                            mu0 * mu0.transpose());
}

CMatrix error_covariance(const StructureConstants& sc, const RMatrix& p,
                         const RVector& mu) {
  check_p(p, sc.n());
  return p.cast<Complex>() +
         Complex(0.0, 1.0) * sc.theta().dot(mu).cast<Complex>();
}

RMatrix error_cov_rhs(const CoefficientSet& coeffs,
                      const MeasurementSpec& meas, const RMatrix& gain,
                      const RMatrix& p, const RVector& mu) {
  const RMatrix closed = coeffs.a - gain * meas.c;
  const RMatrix cross = gain * meas.d * coeffs.dispersion(mu).transpose();
  return closed * p + p * closed.transpose() +
         sigma_of_mu(coeffs.system, mu) - cross - cross.transpose() +
         gain * meas.f * gain.transpose();
}

RMatrix optimal_gain(const RMatrix& p, const RVector& mu,
                     const MeasurementSpec& meas,
                     const CoefficientSet& coeffs) {
  check_p(p, coeffs.n());
  const RMatrix numerator =
      p * meas.c.transpose() + coeffs.dispersion(mu) * meas.d.transpose();
  return meas.f.llt().solve(numerator.transpose()).transpose();
}

ErrorCovTrajectory error_cov_trajectory(const CoefficientSet& coeffs,
                                        const MeasurementSpec& meas,
                                        const GainFunction& gain_fn,
                                        const RMatrix& p0,
                                        const MeanFunction& mean_fn,
                                        const std::vector<double>& grid,
                                        const ode::StepPolicy& policy) {
  const Eigen::Index n = coeffs.n();
  check_p(p0, n);
  if (grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "error_cov_trajectory: empty grid");
  }
  ode::require_increasing(grid, "error_cov_trajectory");
  check_gain(gain_fn(grid.front()), n, meas.r());

  ode::OdeProblem problem;
  problem.dimension = n * n;
  problem.rhs = [&](double t, const RVector& y) {
    return RVector(
        pack(error_cov_rhs(coeffs, meas, gain_fn(t), unpack(y, n), mean_fn(t))));
  };
  problem.project = [n](RVector& y) { y = pack(linalg::symmetrize(unpack(y, n))); };
  problem.t0 = grid.front();
  problem.y0 = pack(p0);
  problem.t_end = grid.back();
  problem.output_times = grid;
  problem.policy = policy;
  const ode::Trajectory traj = ode::integrate(problem);

  ErrorCovTrajectory out;
  out.times = traj.times;
  for (const RVector& y : traj.states) out.p.push_back(unpack(y, n));
  return out;
}

RiccatiTrajectory riccati_trajectory(const CoefficientSet& coeffs,
                                     const MeasurementSpec& meas,
                                     const RMatrix& p0,
                                     const MeanFunction& mean_fn,
                                     const std::vector<double>& grid,
                                     const ode::StepPolicy& policy) {
  const Eigen::Index n = coeffs.n();
  check_p(p0, n);
  if (grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "riccati_trajectory: empty grid");
  }
  ode::require_increasing(grid, "riccati_trajectory");
  const Eigen::LLT<RMatrix> f_llt(meas.f);

  ode::OdeProblem problem;
  problem.dimension = n * n;
  problem.rhs = [&](double t, const RVector& y) {
    const RMatrix p = unpack(y, n);
    const RVector mu = mean_fn(t);
    const RMatrix cross =
        p * meas.c.transpose() + coeffs.dispersion(mu) * meas.d.transpose();
    const RMatrix dp = coeffs.a * p + p * coeffs.a.transpose() +
                       sigma_of_mu(coeffs.system, mu) -
                       cross * f_llt.solve(cross.transpose());
    return RVector(pack(dp));
  };
  problem.project = [n](RVector& y) { y = pack(linalg::symmetrize(unpack(y, n))); };
  problem.t0 = grid.front();
  problem.y0 = pack(p0);
  problem.t_end = grid.back();
  problem.output_times = grid;
  problem.policy = policy;
  const ode::Trajectory traj = ode::integrate(problem);

  RiccatiTrajectory out;
  out.times = traj.times;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    RMatrix p = unpack(traj.states[i], n);
    out.gain.push_back(optimal_gain(p, mean_fn(traj.times[i]), meas, coeffs));
    out.p.push_back(std::move(p));
  }
  return out;
}

ObserverDesign steady_design(const CoefficientSet& coeffs,
                             const MeasurementSpec& meas) {
  const auto open_loop = linalg::is_hurwitz(coeffs.a);
  if (!open_loop.hurwitz) {
    throw Error(ErrorCode::kNotHurwitz,
                "steady design needs a Hurwitz plant matrix A");
  }
  ObserverDesign out;
  out.mu_inf = -coeffs.a.partialPivLu().solve(coeffs.b);
  linalg::AreProblem problem;
  problem.a = coeffs.a;
  problem.c = meas.c;
  problem.sigma = sigma_of_mu(coeffs.system, out.mu_inf);
  problem.b = coeffs.dispersion(out.mu_inf);
  problem.d = meas.d;
  problem.f = meas.f;
  const linalg::AreSolution sol = linalg::solve_are(problem);
  out.p = sol.p;
  out.gain = sol.gain;
  out.closed_loop_abscissa = sol.closed_loop_abscissa;
  out.are_residual = sol.residual;
  out.method_discrepancy = sol.method_discrepancy;
  return out;
}

ObserverOde observer_ode_coefficients(const CoefficientSet& coeffs,
                                      const MeasurementSpec& meas,
                                      const RMatrix& gain) {
  check_gain(gain, coeffs.n(), meas.r());
  return {coeffs.a - gain * meas.c, coeffs.b - gain * meas.offset, gain};
}

}  // namespace qsm
