#include "doctest.h"

#include <cmath>

#include "qsm/errors.hpp"
#include "qsm/filter.hpp"
#include "support/oracles.hpp"

using namespace qsm;
using qsm::testing::max_abs;

namespace {

RMatrix first_channels(Eigen::Index r, Eigen::Index m) {
  RMatrix d = RMatrix::Zero(r, m);
  for (Eigen::Index i = 0; i < r; ++i) d(i, i) = 1.0;
  return d;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

std::vector<double> uniform_grid(double t0, double t1, int steps) {
  std::vector<double> g;
  for (int k = 0; k <= steps; ++k) g.push_back(t0 + (t1 - t0) * k / steps);
  return g;
}

}  // namespace

TEST_SUITE("filter") {

TEST_CASE("build_measurement examples") {
  testing::Rng rng(139);
  const RMatrix m2 = testing::gaussian_matrix(rng, 2, 3);
  const SystemSpec two = make_system(pauli_preset(), RVector::Zero(3), m2, RVector(RVector::Constant(2, 0.3)));
  const MeasurementSpec meas = build_measurement(two, first_channels(1, 2));
  CHECK(meas.f(0, 0) == 1.0);
  CHECK(max_abs(RMatrix(meas.c - 2.0 * m2.row(1))) == 0.0);
  CHECK(meas.offset(0) == doctest::Approx(0.6));

  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec four = build_measurement(fx.spec, first_channels(2, 4));
  CHECK(max_abs(RMatrix(four.f - RMatrix::Identity(2, 2))) == 0.0);
  CHECK(max_abs(RMatrix(four.d * symplectic_j(4) * four.d.transpose())) == 0.0);
  CHECK(max_abs(RMatrix(four.c - 2.0 * four.d * symplectic_j(4) * fx.spec.coupling)) == 0.0);

  CHECK(code_of([&] { build_measurement(two, RMatrix::Identity(2, 2)); }) ==
        ErrorCode::kInvalidArgument);
  // J pairs channel 1 with channel 3.
  RMatrix noncommuting = RMatrix::Zero(2, 4);
  noncommuting(0, 0) = 1.0;
  noncommuting(1, 2) = 1.0;
  CHECK(code_of([&] { build_measurement(fx.spec, noncommuting); }) ==
        ErrorCode::kNonCommutingMeasurement);
  RMatrix degenerate = RMatrix::Zero(2, 4);
  degenerate(0, 0) = 1.0;
  degenerate(1, 0) = 2.0;
  CHECK(code_of([&] { build_measurement(fx.spec, degenerate); }) == ErrorCode::kRankDeficient);
  CHECK(code_of([&] { build_measurement(fx.spec, RMatrix::Identity(1, 3)); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("sigma of mu") {
  testing::Rng rng(149);
  const SystemSpec closed =
      make_system(pauli_preset(), RVector::Ones(3), RMatrix::Zero(4, 3), RVector::Zero(4));
  CHECK(max_abs(sigma_of_mu(closed, testing::point_in_ball(rng, 3, 1.0))) == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
    const RMatrix at_zero = sigma_of_mu(fx.spec, RVector::Zero(3));
    CHECK(max_abs(RMatrix(at_zero - 4.0 * testing::pauli_lambda_closed_form(fx.spec.coupling))) <= 1e-12);
    for (int k = 0; k < 5; ++k) {
      const RVector mu = testing::point_in_ball(rng, 3, 1.0);
      const RMatrix sigma = sigma_of_mu(fx.spec, mu);
      CHECK(max_abs(RMatrix(sigma - sigma.transpose())) == 0.0);
      CHECK(max_abs(RMatrix(sigma - diffusion_matrix(fx.spec, mu).real())) <= 1e-12);
      CHECK(max_abs(RMatrix(sigma - testing::gksl_pauli_diffusion(fx.spec.coupling, mu).real())) <= 1e-12);
      CHECK(linalg::min_eigenvalue_symmetric(sigma) >= -1e-10);
    }
  }
}

TEST_CASE("initial error covariance and the full error covariance") {
  const StructureConstants sc = pauli_preset();
  const RMatrix p0 = initial_error_covariance(sc, RVector::Unit(3, 2));
  CHECK(max_abs(RMatrix(p0 - RMatrix(Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal()))) == 0.0);

  testing::Rng rng(151);
  const RVector mu = testing::point_in_ball(rng, 3, 1.0);
  const RMatrix p = initial_error_covariance(sc, mu);
  const CMatrix g = error_covariance(sc, p, mu);
  CHECK(max_abs(RMatrix(g.real() - p)) == 0.0);
  CHECK(max_abs(CMatrix(g - covariance_from_mean(sc, mu))) <= 1e-15);
  for (int trial = 0; trial < 10; ++trial) {
    const RMatrix s = testing::gaussian_matrix(rng, 2, 3);
    const Complex weighted = (s.cast<Complex>() * g * s.transpose().cast<Complex>()).trace();
    const double real_weighted = (s * p * s.transpose()).trace();
    CHECK(std::abs(weighted - real_weighted) <= 1e-12);
  }
}

TEST_CASE("optimal gain") {
  testing::Rng rng(157);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
  CHECK(max_abs(optimal_gain(RMatrix::Zero(3, 3), RVector::Zero(3), meas, fx.coeffs)) == 0.0);

  // One variable: Theta = 0, so B vanishes and K* = P C / F.
  Array3<Complex> beta(1);
  beta(0, 0, 0) = 1.0;
  const StructureConstants scalar(CMatrix::Identity(1, 1), beta);
  RMatrix coupling(2, 1);
  coupling << 0.4, -0.7;
  const SystemSpec plant = make_system(scalar, RVector::Ones(1), coupling, RVector::Zero(2));
  const CoefficientSet coeffs = synthesize(plant);
  RMatrix d(1, 2);
  d << 2.0, 0.0;
  const MeasurementSpec scalar_meas = build_measurement(plant, d);
  const RMatrix p = RMatrix::Constant(1, 1, 0.8);
  const double c = 2.0 * 2.0 * -0.7;
  CHECK(optimal_gain(p, RVector::Zero(1), scalar_meas, coeffs)(0, 0) ==
        doctest::Approx(0.8 * c / 4.0).epsilon(1e-15));

  for (int trial = 0; trial < 20; ++trial) {
    const RVector mu = testing::point_in_ball(rng, 3, 1.0);
    const RMatrix pm = initial_error_covariance(fx.spec.sc, mu);
    const RMatrix k_star = optimal_gain(pm, mu, meas, fx.coeffs);
    const RMatrix dk = testing::gaussian_matrix(rng, 3, 2);
    const RMatrix base = error_cov_rhs(fx.coeffs, meas, k_star, pm, mu);
    const RMatrix moved = error_cov_rhs(fx.coeffs, meas, k_star + dk, pm, mu);
    CHECK(max_abs(RMatrix(moved - base - dk * meas.f * dk.transpose())) <= 1e-12);
    CHECK(moved.trace() >= base.trace());
  }
}

TEST_CASE("zero gain reproduces the covariance flow") {
  testing::Rng rng(163);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
  const RVector mu0 = testing::point_in_ball(rng, 3, 1.0);
  const MeanFunction mean = closed_form_mean(fx.coeffs, mu0);
  const std::vector<double> grid = uniform_grid(0.0, 1.0, 20);
  const RMatrix p0 = initial_error_covariance(fx.spec.sc, mu0);
  const ErrorCovTrajectory open = error_cov_trajectory(
      fx.coeffs, meas, [](double) { return RMatrix(RMatrix::Zero(3, 2)); }, p0, mean, grid);
  const std::vector<MomentState> full = covariance_trajectory(
      fx.coeffs, {0.0, mu0, covariance_from_mean(fx.spec.sc, mu0)}, grid);
  REQUIRE(open.p.size() == full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(max_abs(RMatrix(open.p[i] - full[i].cov.real())) <= 1e-9);
    CHECK(max_abs(RMatrix(open.p[i] - open.p[i].transpose())) == 0.0);
  }
  CHECK_THROWS_AS(error_cov_trajectory(fx.coeffs, meas,
                                       [](double) { return RMatrix(RMatrix::Zero(3, 2)); }, p0,
                                       mean, {0.0, 0.5, 0.5}),
                  Error);
}

TEST_CASE("Riccati trajectory") {
  testing::Rng rng(167);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
  const RVector mu0 = testing::point_in_ball(rng, 3, 1.0);
  const MeanFunction mean = closed_form_mean(fx.coeffs, mu0);
  const std::vector<double> grid = uniform_grid(0.0, 2.0, 40);
  const RMatrix p0 = initial_error_covariance(fx.spec.sc, mu0);
  const RiccatiTrajectory ric = riccati_trajectory(fx.coeffs, meas, p0, mean, grid);

  SUBCASE("recorded gains are the optimal gains") {
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(max_abs(RMatrix(ric.gain[i] - optimal_gain(ric.p[i], mean(grid[i]), meas, fx.coeffs))) == 0.0);
  }
  SUBCASE("dominance over zero gain") {
    const ErrorCovTrajectory open = error_cov_trajectory(
        fx.coeffs, meas, [](double) { return RMatrix(RMatrix::Zero(3, 2)); }, p0, mean, grid);
    CHECK(ric.p.back().trace() <= open.p.back().trace());
  }
  SUBCASE("replaying the recorded gains") {
    const int steps = 500;
    const double h = 0.5 / steps;
    const std::vector<double> fine = uniform_grid(0.0, 0.5, steps);
    const RiccatiTrajectory ref =
        riccati_trajectory(fx.coeffs, meas, p0, mean, fine, ode::StepPolicy::fixed(h));
    // Recorded K*(t), linearly interpolated between samples.
    const GainFunction replay = [&](double t) {
      const auto i = std::min<std::size_t>(static_cast<std::size_t>(t / h), fine.size() - 2);
      const double w = (t - fine[i]) / h;
      return RMatrix((1.0 - w) * ref.gain[i] + w * ref.gain[i + 1]);
    };
    const ErrorCovTrajectory again = error_cov_trajectory(fx.coeffs, meas, replay, p0, mean, fine,
                                                          ode::StepPolicy::fixed(h));
    double worst = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i)
      worst = std::max(worst, max_abs(RMatrix(again.p[i] - ref.p[i])));
    CHECK(worst <= 1e-7);
  }
  SUBCASE("noise-free plant stays at zero") {
    const SystemSpec closed =
        make_system(pauli_preset(), RVector::Ones(3), RMatrix::Zero(4, 3), RVector::Zero(4));
    const CoefficientSet coeffs = synthesize(closed);
    const MeasurementSpec m0 = build_measurement(closed, first_channels(2, 4));
    const RiccatiTrajectory zero =
        riccati_trajectory(coeffs, m0, RMatrix::Zero(3, 3), closed_form_mean(coeffs, mu0), grid);
    for (const RMatrix& p : zero.p) CHECK(max_abs(p) == 0.0);
  }
}

TEST_CASE("Riccati optimality against constant gains") {
  testing::Rng rng(173);
  for (int fixture = 0; fixture < 3; ++fixture) {
    const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
    const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
    const RVector mu0 = testing::point_in_ball(rng, 3, 1.0);
    const MeanFunction mean = closed_form_mean(fx.coeffs, mu0);
    const std::vector<double> grid = uniform_grid(0.0, 1.0, 50);
    const RMatrix p0 = initial_error_covariance(fx.spec.sc, mu0);
    const RiccatiTrajectory ric = riccati_trajectory(fx.coeffs, meas, p0, mean, grid);
    for (double eps : {0.1, 1.0}) {
      const RMatrix k = ric.gain.back() + eps * testing::gaussian_matrix(rng, 3, 2);
      const ErrorCovTrajectory other = error_cov_trajectory(
          fx.coeffs, meas, [&](double) { return k; }, p0, mean, grid);
      for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(linalg::min_eigenvalue_symmetric(RMatrix(other.p[i] - ric.p[i])) >= -1e-8);
    }
  }
}

TEST_CASE("steady design") {
  testing::Rng rng(179);

  SUBCASE("noise-free plant") {
    const SystemSpec spec = make_system(pauli_preset(), RVector::Zero(3), RMatrix::Zero(4, 3), RVector::Zero(4));
    const CoefficientSet coeffs = synthesize(spec);
    const MeasurementSpec meas = build_measurement(spec, first_channels(2, 4));
    CHECK(code_of([&] { steady_design(coeffs, meas); }) == ErrorCode::kNotHurwitz);
  }

  SUBCASE("Pauli fixtures") {
    for (int trial = 0; trial < 10; ++trial) {
      const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
      const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
      const ObserverDesign design = steady_design(fx.coeffs, meas);
      CHECK(design.are_residual <= 1e-8);
      CHECK(design.closed_loop_abscissa < 0.0);
      CHECK(design.method_discrepancy <= 1e-6);
      CHECK(max_abs(RMatrix(design.p - design.p.transpose())) <= 1e-12);
      CHECK(linalg::min_eigenvalue_symmetric(design.p) >= -1e-10);
      CHECK(max_abs(RMatrix(design.mu_inf - invariant_state(fx.coeffs).mu)) <= 1e-12);
      CHECK(max_abs(RMatrix(design.gain - optimal_gain(design.p, design.mu_inf, meas, fx.coeffs))) <= 1e-12);
      const RMatrix rhs = error_cov_rhs(fx.coeffs, meas, design.gain, design.p, design.mu_inf);
      CHECK(rhs.norm() <= 1e-8 * (1.0 + design.p.norm()));
      const ObserverOde obs = observer_ode_coefficients(fx.coeffs, meas, design.gain);
      CHECK(linalg::is_hurwitz(obs.drift).abscissa == doctest::Approx(design.closed_loop_abscissa));
    }
  }

  SUBCASE("long-horizon Riccati limit") {
    const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
    const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
    const ObserverDesign design = steady_design(fx.coeffs, meas);
    const MeanFunction stationary = closed_form_mean(fx.coeffs, design.mu_inf);
    const RiccatiTrajectory ric = riccati_trajectory(
        fx.coeffs, meas, initial_error_covariance(fx.spec.sc, design.mu_inf), stationary,
        uniform_grid(0.0, 20.0, 40));
    CHECK(max_abs(RMatrix(ric.p.back() - design.p)) <= 1e-6);
  }
}

TEST_CASE("error covariance imaginary part does not depend on the gain") {
  testing::Rng rng(181);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
  const RVector mu0 = testing::point_in_ball(rng, 3, 1.0);
  const MeanFunction mean = closed_form_mean(fx.coeffs, mu0);
  const std::vector<double> grid = uniform_grid(0.0, 1.0, 10);
  const RMatrix p0 = initial_error_covariance(fx.spec.sc, mu0);
  const RiccatiTrajectory ric = riccati_trajectory(fx.coeffs, meas, p0, mean, grid);
  const RMatrix k = testing::gaussian_matrix(rng, 3, 2);
  const ErrorCovTrajectory other =
      error_cov_trajectory(fx.coeffs, meas, [&](double) { return k; }, p0, mean, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CMatrix g1 = error_covariance(fx.spec.sc, ric.p[i], mean(grid[i]));
    const CMatrix g2 = error_covariance(fx.spec.sc, other.p[i], mean(grid[i]));
    CHECK(max_abs(RMatrix(g1.imag() - g2.imag())) == 0.0);
    const RMatrix s = testing::gaussian_matrix(rng, 3, 3);
    CHECK(std::abs((s.cast<Complex>() * g1 * s.transpose().cast<Complex>()).trace() -
                   (s * ric.p[i] * s.transpose()).trace()) <= 1e-12);
  }
}

TEST_CASE("observer coefficients") {
  testing::Rng rng(191);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  const MeasurementSpec meas = build_measurement(fx.spec, first_channels(2, 4));
  const ObserverOde open = observer_ode_coefficients(fx.coeffs, meas, RMatrix::Zero(3, 2));
  CHECK(max_abs(RMatrix(open.drift - fx.coeffs.a)) == 0.0);
  CHECK(max_abs(RMatrix(open.offset - fx.coeffs.b)) == 0.0);
  CHECK(max_abs(open.input_gain) == 0.0);

  // Observer mean: d xi = ((A - KC) xi + b - Kd) dt + K (C mu + d) dt, so the
  // mean error obeys e' = (A - KC) e and stays at zero from xi(0) = mu(0).
  const RMatrix k = testing::gaussian_matrix(rng, 3, 2);
  const ObserverOde obs = observer_ode_coefficients(fx.coeffs, meas, k);
  const RVector mu0 = testing::point_in_ball(rng, 3, 1.0);
  const MeanFunction mean = closed_form_mean(fx.coeffs, mu0);
  const std::vector<double> grid = uniform_grid(0.0, 2.0, 200);
  ode::OdeProblem problem;
  problem.dimension = 3;
  problem.rhs = [&](double t, const RVector& xi) -> RVector {
    return obs.drift * xi + obs.offset + obs.input_gain * (meas.c * mean(t) + meas.offset);
  };
  problem.y0 = mu0;
  problem.t_end = grid.back();
  problem.output_times = grid;
  problem.policy = ode::StepPolicy::fixed(1e-3);
  const ode::Trajectory traj = ode::integrate(problem);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, (traj.states[i] - mean(grid[i])).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-10);

  CHECK_THROWS_AS(observer_ode_coefficients(fx.coeffs, meas, RMatrix::Zero(2, 3)), Error);
}

}  // TEST_SUITE
