#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "docp/shooting.hpp"
#include "test_problems.hpp"

using docp::Grid;
using docp::Matrix;
using docp::ShootingOptions;
using docp::Vector;

TEST_CASE("scalar steering residual in closed form") {
  const double a = 3.0, T = 1.0;
  auto ocp = testprob::scalar_steering(a, T);
  Grid g(0.0, T, 200);

  SUBCASE("the optimal initial adjoint zeroes the residual") {
    const Vector r =
        docp::shooting_residual(ocp, 0.0, Vector::Constant(1, 2.0 * a / T), nullptr, g);
    CHECK(std::abs(r(0)) <= 1e-10);
  }
  SUBCASE("a zero adjoint leaves the state at the origin") {
    const Vector r = docp::shooting_residual(ocp, 0.0, Vector::Zero(1), nullptr, g);
    CHECK(r(0) == doctest::Approx(-a).epsilon(1e-12));
  }
}

TEST_CASE("finite-difference jacobian of the scalar steering map is T/2") {
  const double T = 1.0;
  auto ocp = testprob::scalar_steering(3.0, T);
  Grid g(0.0, T, 200);
  const Matrix jac = docp::fd_jacobian(ocp, 0.0, Vector::Zero(1), nullptr, g);
  CHECK(std::abs(jac(0, 0) - T / 2.0) <= 1e-6);
}

TEST_CASE("fd_jacobian is deterministic, bit for bit") {
  auto ocp = testprob::smooth_two_state();
  Grid g(0.0, ocp.horizon, 150);
  Vector p0(2);
  p0 << 0.1, -0.2;
  const Matrix a = docp::fd_jacobian(ocp, 0.0, p0, nullptr, g);
  const Matrix b = docp::fd_jacobian(ocp, 0.0, p0, nullptr, g);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("newton on an affine residual converges in one step") {
  const double a = 3.0, T = 1.0;
  auto ocp = testprob::scalar_steering(a, T);
  Grid g(0.0, T, 200);
  auto res = docp::newton_solve(ocp, 0.0, Vector::Zero(1), nullptr, g);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.p0(0) == doctest::Approx(6.0).epsilon(1e-8));
  CHECK(res.lift.cost == doctest::Approx(9.0).epsilon(1e-8));
}

TEST_CASE("a target on the uncontrolled flow converges with zero iterations") {
  auto ocp = testprob::smooth_two_state();
  Grid g(0.0, ocp.horizon, 400);
  auto free = docp::integrate_extremal(ocp, 0.0, Vector::Zero(2), nullptr, g);
  ocp.target = free.state.node(g.n_steps);
  auto res = docp::newton_solve(ocp, 0.0, Vector::Zero(2), nullptr, g);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.p0.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("result invariants") {
  auto ocp = testprob::smooth_two_state();
  Grid g(0.0, ocp.horizon, 400);
  auto res = docp::newton_solve(ocp, 0.0, Vector::Zero(2), nullptr, g);
  REQUIRE(res.converged);

  const ShootingOptions opts;
  CHECK(res.residual_norm <= opts.residual_tol_abs + opts.residual_tol_rel * ocp.target.norm());
  // Terminal node equals target + residual exactly.
  const Vector terminal = res.lift.state.node(g.n_steps);
  CHECK((terminal - (ocp.target + res.residual)).cwiseAbs().maxCoeff() == 0.0);
  // Accepted iterates never increase the residual norm.
  for (std::size_t i = 1; i < res.residual_history.size(); ++i) {
    CHECK(res.residual_history[i] < res.residual_history[i - 1]);
  }
}

TEST_CASE("unreachable direction makes the jacobian singular") {
  auto ocp = testprob::scalar_steering(3.0, 1.0);
  ocp.f2 = testprob::zero_field(1);  // no control authority at all
  Grid g(0.0, 1.0, 100);
  CHECK_THROWS_AS(docp::newton_solve(ocp, 0.0, Vector::Zero(1), nullptr, g),
                  docp::SingularJacobianError);
}

TEST_CASE("options are validated") {
  auto ocp = testprob::scalar_steering(3.0, 1.0);
  Grid g(0.0, 1.0, 100);
  ShootingOptions bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(docp::newton_solve(ocp, 0.0, Vector::Zero(1), nullptr, g, bad),
                  std::invalid_argument);
  bad = ShootingOptions{};
  bad.fd_step = 0.0;
  CHECK_THROWS_AS(docp::newton_solve(ocp, 0.0, Vector::Zero(1), nullptr, g, bad),
                  std::invalid_argument);
}
