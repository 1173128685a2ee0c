#include "doctest.h"

#include <cmath>

#include "qsm/errors.hpp"
#include "qsm/linalg.hpp"
#include "qsm/ode.hpp"
#include "support/oracles.hpp"

using namespace qsm;
using qsm::testing::max_abs;

TEST_SUITE("linalg") {

TEST_CASE("expm basics") {
  CHECK(max_abs(linalg::expm(RMatrix(RMatrix::Zero(4, 4))) - RMatrix::Identity(4, 4)) == 0.0);
  RVector d(3);
  d << -2.0, 0.5, 3.0;
  const RMatrix e = linalg::expm(RMatrix(d.asDiagonal()));
  for (int i = 0; i < 3; ++i) CHECK(e(i, i) == doctest::Approx(std::exp(d(i))).epsilon(1e-14));
  CHECK(max_abs(RMatrix(e - RMatrix(e.diagonal().asDiagonal()))) == 0.0);
  CHECK_THROWS_AS(linalg::expm(RMatrix(RMatrix::Zero(2, 3))), Error);
}

TEST_CASE("expm matches the Taylor oracle") {
  testing::Rng rng(101);
  for (double scale : {0.1, 1.0, 4.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const RMatrix a = testing::gaussian_matrix(rng, 5, 5, scale);
      const RMatrix ref = testing::taylor_expm(a);
      CHECK(max_abs(RMatrix(linalg::expm(a) - ref)) <= 1e-10 * std::max(1.0, max_abs(ref)));
      const CMatrix ac = a.cast<Complex>() +
                         Complex(0.0, 1.0) * testing::gaussian_matrix(rng, 5, 5, scale).cast<Complex>();
      const CMatrix refc = testing::taylor_expm(ac);
      CHECK(max_abs(CMatrix(linalg::expm(ac) - refc)) <= 1e-10 * std::max(1.0, max_abs(refc)));
    }
  }
}

TEST_CASE("expm group properties") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const RMatrix a = testing::gaussian_matrix(rng, 4, 4);
    CHECK(max_abs(RMatrix(linalg::expm(a) * linalg::expm(RMatrix(-a)) - RMatrix::Identity(4, 4))) <=
          1e-10);
    // Commuting pair: a polynomial in a.
    const RMatrix b = 0.3 * a * a - 0.7 * a + RMatrix::Identity(4, 4);
    const RMatrix sum = a + b;
    CHECK(max_abs(RMatrix(linalg::expm(sum) - linalg::expm(a) * linalg::expm(b))) <=
          1e-10 * std::max(1.0, max_abs(linalg::expm(sum))));
  }
}

TEST_CASE("psi") {
  CHECK(max_abs(linalg::psi(RMatrix::Zero(3, 3), 2.5) - 2.5 * RMatrix::Identity(3, 3)) <= 1e-15);
  CHECK(max_abs(linalg::psi(RMatrix::Random(3, 3), 0.0)) == 0.0);

  RMatrix nil = RMatrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  RMatrix expected(2, 2);
  expected << 1.0, 0.5, 0.0, 1.0;
  CHECK(max_abs(RMatrix(linalg::psi(nil, 1.0) - expected)) <= 1e-15);

  testing::Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const RMatrix a = testing::gaussian_matrix(rng, 4, 4) - 2.0 * RMatrix::Identity(4, 4);
    const double t = 0.3 + 0.4 * trial;
    const RMatrix closed =
        a.partialPivLu().solve(RMatrix(testing::taylor_expm(RMatrix(t * a)) - RMatrix::Identity(4, 4)));
    CHECK(max_abs(RMatrix(linalg::psi(a, t) - closed)) <= 1e-10 * std::max(1.0, max_abs(closed)));
  }
}

TEST_CASE("psi derivative converges at second order") {
  testing::Rng rng(19);
  const RMatrix a = testing::gaussian_matrix(rng, 3, 3);
  const double t = 0.8;
  const RMatrix target = testing::taylor_expm(RMatrix(t * a));
  double previous = 0.0;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const RMatrix fd = (linalg::psi(a, t + h) - linalg::psi(a, t - h)) / (2.0 * h);
    const double err = max_abs(RMatrix(fd - target));
    if (previous > 0.0) {
      const double ratio = previous / err;
      CHECK(ratio > 3.5);
      CHECK(ratio < 4.5);
    }
    previous = err;
  }
}

TEST_CASE("is_hurwitz") {
  auto rep = linalg::is_hurwitz(-RMatrix::Identity(3, 3));
  CHECK(rep.hurwitz);
  CHECK(rep.abscissa == doctest::Approx(-1.0));
  RMatrix rot(2, 2);
  rot << 0.0, 1.0, -1.0, 0.0;
  rep = linalg::is_hurwitz(rot);
  CHECK_FALSE(rep.hurwitz);
  CHECK(std::abs(rep.abscissa) <= 1e-15);
}

TEST_CASE("solve_lyapunov") {
  CMatrix g = linalg::solve_lyapunov(RMatrix(-RMatrix::Identity(2, 2)),
                                     CMatrix(2.0 * CMatrix::Identity(2, 2)));
  CHECK(max_abs(CMatrix(g - CMatrix::Identity(2, 2))) <= 1e-14);

  RMatrix a = RMatrix::Zero(2, 2);
  a(0, 0) = -1.0;
  a(1, 1) = -2.0;
  const RMatrix gr = linalg::solve_lyapunov(a, RMatrix(RMatrix::Identity(2, 2)));
  CHECK(gr(0, 0) == doctest::Approx(0.5));
  CHECK(gr(1, 1) == doctest::Approx(0.25));
  CHECK(std::abs(gr(0, 1)) <= 1e-15);

  RMatrix rot(2, 2);
  rot << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(linalg::solve_lyapunov(rot, RMatrix(RMatrix::Identity(2, 2))), Error);
}

TEST_CASE("solve_lyapunov against the integral oracle") {
  testing::Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
    const RMatrix& a = fx.coeffs.a;
    const RMatrix b = testing::gaussian_matrix(rng, 3, 3);
    const CMatrix q = (b * b.transpose()).cast<Complex>() +
                      Complex(0.0, 1.0) * (b - b.transpose()).cast<Complex>() * 0.1;
    const CMatrix g = linalg::solve_lyapunov(a, q);
    const double scale = 1.0 + q.norm();
    CHECK((a.cast<Complex>() * g + g * a.transpose().cast<Complex>() + q).norm() <= 1e-8 * scale);
    CHECK(max_abs(CMatrix(g - g.adjoint())) <= 1e-12 * scale);
    const double decay = -linalg::is_hurwitz(a).abscissa;
    const CMatrix ref = testing::quadrature_lyapunov(a, q, 40.0 / decay, 8000);
    CHECK(max_abs(CMatrix(g - ref)) <= 1e-6 * std::max(1.0, max_abs(ref)));
  }
}

TEST_CASE("scalar Riccati equation") {
  linalg::AreProblem pr;
  pr.a = RMatrix::Constant(1, 1, -1.0);
  pr.c = RMatrix::Constant(1, 1, 1.0);
  pr.sigma = RMatrix::Constant(1, 1, 1.0);
  pr.b = RMatrix::Zero(1, 1);
  pr.d = RMatrix::Constant(1, 1, 1.0);
  pr.f = RMatrix::Constant(1, 1, 1.0);
  const linalg::AreSolution sol = linalg::solve_are(pr);
  CHECK(sol.p(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK(sol.gain(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK(sol.closed_loop_abscissa == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
  CHECK(sol.residual <= 1e-8);
}

TEST_CASE("zero-noise Riccati equation has the zero solution") {
  testing::Rng rng(29);
  const testing::PauliFixture fx = testing::random_pauli_fixture(rng);
  linalg::AreProblem pr;
  pr.a = fx.coeffs.a;
  pr.c = testing::gaussian_matrix(rng, 2, 3);
  pr.sigma = RMatrix::Zero(3, 3);
  pr.b = RMatrix::Zero(3, 4);
  pr.d = RMatrix::Identity(2, 4);
  pr.f = RMatrix::Identity(2, 2);
  const linalg::AreSolution sol = linalg::solve_are(pr);
  CHECK(max_abs(sol.p) <= 1e-10);
  CHECK(max_abs(sol.gain) <= 1e-10);
}

TEST_CASE("Riccati solver paths agree on random filtering problems") {
  testing::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    linalg::AreProblem pr;
    pr.a = testing::gaussian_matrix(rng, 4, 4);
    pr.c = testing::gaussian_matrix(rng, 2, 4);
    const RMatrix g = testing::gaussian_matrix(rng, 4, 4);
    pr.b = testing::gaussian_matrix(rng, 4, 4, 0.5);
    pr.d = testing::gaussian_matrix(rng, 2, 4);
    pr.f = pr.d * pr.d.transpose();
    // B B^T dominates S F^-1 S^T, so sigma - S F^-1 S^T stays positive.
    pr.sigma = g * g.transpose() + pr.b * pr.b.transpose() + 0.1 * RMatrix::Identity(4, 4);
    const linalg::AreSolution sol = linalg::solve_are(pr);
    CHECK(sol.residual <= 1e-8);
    CHECK(sol.closed_loop_abscissa < 0.0);
    CHECK(sol.method_discrepancy <= 1e-6);
    const RMatrix p_sub = linalg::solve_are_invariant_subspace(pr);
    const RMatrix p_newton = linalg::solve_are_newton(pr, sol.gain);
    CHECK(max_abs(RMatrix(p_sub - p_newton)) <= 1e-7 * std::max(1.0, max_abs(p_sub)));
  }
}

TEST_CASE("integrate: exponential decay and constant drift") {
  ode::OdeProblem pr;
  pr.dimension = 1;
  pr.rhs = [](double, const RVector& y) { return RVector(-y); };
  pr.y0 = RVector::Ones(1);
  pr.t_end = 1.0;
  pr.policy = ode::StepPolicy::fixed(1e-2);
  ode::Trajectory tr = ode::integrate(pr);
  CHECK(std::abs(tr.states.back()(0) - std::exp(-1.0)) <= 1e-8);

  pr.policy = ode::StepPolicy::adaptive(1e-12, 1e-12);
  tr = ode::integrate(pr);
  CHECK(std::abs(tr.states.back()(0) - std::exp(-1.0)) <= 1e-10);

  RVector b(2);
  b << 0.5, -1.25;
  pr.dimension = 2;
  pr.rhs = [b](double, const RVector&) { return b; };
  pr.y0 = RVector::Zero(2);
  pr.t_end = 2.0;
  pr.output_times = ode::uniform_grid(0.0, 2.0, 9);
  pr.policy = ode::StepPolicy::fixed(0.1);
  tr = ode::integrate(pr);
  REQUIRE(tr.times.size() == 9);
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    CHECK(max_abs(RMatrix(tr.states[i] - tr.times[i] * b)) <= 1e-14);
}

TEST_CASE("RK4 error falls by 16 when the step halves") {
  testing::Rng rng(37);
  const RMatrix a = testing::gaussian_matrix(rng, 3, 3);
  const RVector y0 = testing::gaussian_vector(rng, 3);
  const RVector exact = testing::taylor_expm(a) * y0;
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025}) {
    ode::OdeProblem pr;
    pr.dimension = 3;
    pr.rhs = [&a](double, const RVector& y) { return RVector(a * y); };
    pr.y0 = y0;
    pr.t_end = 1.0;
    pr.policy = ode::StepPolicy::fixed(h);
    errs.push_back((ode::integrate(pr).states.back() - exact).norm());
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double ratio = errs[i - 1] / errs[i];
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
  }
}

TEST_CASE("integrate rejects bad grids and blow-up") {
  ode::OdeProblem pr;
  pr.dimension = 1;
  pr.rhs = [](double, const RVector& y) { return RVector(y.array().square()); };
  pr.y0 = RVector::Ones(1);
  pr.t_end = 2.0;
  pr.policy = ode::StepPolicy::adaptive(1e-10, 1e-10);
  CHECK_THROWS_AS(ode::integrate(pr), Error);
  CHECK_THROWS_AS(ode::require_increasing({0.0, 1.0, 1.0}, "grid"), Error);
}

}  // TEST_SUITE
