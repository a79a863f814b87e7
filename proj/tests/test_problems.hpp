#pragma once

// Small problem instances shared across the test suites.

#include <cmath>

#include "docp/problem.hpp"
#include "docp/trajectory.hpp"

namespace testprob {

using docp::Matrix;
using docp::Vector;

inline docp::SmoothField zero_field(int n) {
  return {[n](const Vector&) { return Vector(Vector::Zero(n)); },
          [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); }};
}

inline docp::SmoothField constant_field(const Vector& c) {
  const auto n = c.size();
  return {[c](const Vector&) { return c; },
          [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); }};
}

inline docp::SmoothField linear_field(const Matrix& a) {
  return {[a](const Vector& x) { return Vector(a * x); }, [a](const Vector&) { return a; }};
}

/// x' = u: pure steering of a scalar integrator towards `target`.
inline docp::DelayedOCP scalar_steering(double target, double horizon) {
  docp::DelayedOCP ocp;
  ocp.n = 1;
  ocp.f0 = zero_field(1);
  ocp.f1 = zero_field(1);
  ocp.f2 = constant_field(Vector::Ones(1));
  ocp.history = [](double) { return Vector(Vector::Zero(1)); };
  ocp.max_delay = 1.0;
  ocp.horizon = horizon;
  ocp.target = Vector::Constant(1, target);
  return ocp;
}

/// x'(t) = x(t - tau) + u(t), history 1, steer x(1) to 2.
inline docp::DelayedOCP delayed_feedback_scalar() {
  docp::DelayedOCP ocp;
  ocp.n = 1;
  ocp.f0 = zero_field(1);
  ocp.f1 = linear_field(Matrix::Identity(1, 1));
  ocp.f2 = constant_field(Vector::Ones(1));
  ocp.history = [](double) { return Vector(Vector::Ones(1)); };
  ocp.max_delay = 1.0;
  ocp.horizon = 1.0;
  ocp.target = Vector::Constant(1, 2.0);
  return ocp;
}

/// Bounded nonlinear 2-state system with a genuinely delayed channel:
/// x1' = x2, x2' = -sin(x1) + 0.5 sin(x1(t - tau)) + u.
inline docp::DelayedOCP smooth_two_state() {
  docp::DelayedOCP ocp;
  ocp.n = 2;
  ocp.f0.eval = [](const Vector& x) {
    Vector out(2);
    out << x[1], -std::sin(x[0]);
    return out;
  };
  ocp.f0.jacobian = [](const Vector& x) {
    Matrix jac = Matrix::Zero(2, 2);
    jac(0, 1) = 1.0;
    jac(1, 0) = -std::cos(x[0]);
    return jac;
  };
  ocp.f1.eval = [](const Vector& x) {
    Vector out(2);
    out << 0.0, 0.5 * std::sin(x[0]);
    return out;
  };
  ocp.f1.jacobian = [](const Vector& x) {
    Matrix jac = Matrix::Zero(2, 2);
    jac(1, 0) = 0.5 * std::cos(x[0]);
    return jac;
  };
  ocp.f2 = constant_field((Vector(2) << 0.0, 1.0).finished());
  Vector phi(2);
  phi << 0.3, 0.0;
  ocp.history = [phi](double) { return phi; };
  ocp.max_delay = 1.0;
  ocp.horizon = 2.0;
  ocp.target = (Vector(2) << 0.0, 0.5).finished();
  return ocp;
}

/// Linear dynamics with constant input field: x' = A0 x + A1 x(t - tau) + u b,
/// A0 a rotation generator so its transition matrix has a closed form.
inline docp::DelayedOCP rotation_linear() {
  Matrix a0(2, 2), a1(2, 2);
  a0 << 0.0, 1.0, -1.0, 0.0;
  a1 << 0.0, 0.0, 0.3, 0.0;
  docp::DelayedOCP ocp;
  ocp.n = 2;
  ocp.f0 = linear_field(a0);
  ocp.f1 = linear_field(a1);
  ocp.f2 = constant_field((Vector(2) << 0.0, 1.0).finished());
  Vector phi(2);
  phi << 1.0, 0.0;
  ocp.history = [phi](double) { return phi; };
  ocp.max_delay = 1.0;
  ocp.horizon = 1.5;
  ocp.target = Vector::Zero(2);
  return ocp;
}

/// Scalar damped system with delayed feedback, cheap enough for very fine
/// grids: x' = -0.2 x + 0.5 sin(x(t - tau)) + u.
inline docp::DelayedOCP scalar_damped() {
  docp::DelayedOCP ocp;
  ocp.n = 1;
  ocp.f0.eval = [](const Vector& x) { return Vector(Vector::Constant(1, -0.2 * x[0])); };
  ocp.f0.jacobian = [](const Vector&) { return Matrix(Matrix::Constant(1, 1, -0.2)); };
  ocp.f1.eval = [](const Vector& x) { return Vector(Vector::Constant(1, 0.5 * std::sin(x[0]))); };
  ocp.f1.jacobian = [](const Vector& x) {
    return Matrix(Matrix::Constant(1, 1, 0.5 * std::cos(x[0])));
  };
  ocp.f2 = constant_field(Vector::Ones(1));
  ocp.history = [](double) { return Vector(Vector::Ones(1)); };
  ocp.max_delay = 1.0;
  ocp.horizon = 1.0;
  ocp.target = Vector::Constant(1, 1.5);
  return ocp;
}

/// The bundled rendezvous instance: v0 = 100 m/s, c0 = 1, start at
/// (0, 0, pi/4, 5e-4), target (1500, 1000, pi/20, 0), T = 19 s.
inline docp::DelayedOCP rendezvous_instance(double max_delay = 19.0) {
  return docp::rendezvous_problem(100.0, 1.0,
                                  Eigen::Vector4d(0.0, 0.0, M_PI / 4.0, 5e-4),
                                  Eigen::Vector4d(1500.0, 1000.0, M_PI / 20.0, 0.0), 19.0,
                                  max_delay);
}

/// Constant-in-time trajectory covering [t0, tf]; handy as a guess.
inline docp::TrajectoryXd constant_trajectory(const Vector& value, double t0, double tf,
                                              int steps) {
  docp::Grid g(t0, tf, steps);
  Matrix vals = value.replicate(1, g.num_nodes());
  Matrix ders = Matrix::Zero(value.size(), g.num_nodes());
  return docp::TrajectoryXd(g, vals, ders);
}

/// Sup distance between two trajectories sampled on `points` common times.
inline double sup_distance(const docp::TrajectoryXd& a, const docp::TrajectoryXd& b, double t0,
                           double tf, int points = 400) {
  double worst = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double t = t0 + (tf - t0) * static_cast<double>(i) / points;
    worst = std::max(worst, (a.sample(t) - b.sample(t)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace testprob
