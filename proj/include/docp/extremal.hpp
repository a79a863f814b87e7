#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "docp/integrate.hpp"
#include "docp/problem.hpp"
#include "docp/trajectory.hpp"

namespace docp {

/// State, adjoint and control of one normal extremal (cost multiplier -1),
/// together with the realized control energy. The state trajectory carries
/// the problem history, so it samples on [-max_delay, horizon]; adjoint and
/// control live on [0, horizon].
struct ExtremalLift {
  TrajectoryXd state;
  TrajectoryXd adjoint;
  TrajectoryXd control;
  double cost = 0.0;
  double tau = 0.0;
  double multiplier = -1.0;
};

/// Thrown when the advanced-term substitution fails to settle.
struct SubstitutionError : std::runtime_error {
  SubstitutionError() : std::runtime_error("advanced-term substitution did not settle") {}
};

/// Energy-optimal control as a function of state and adjoint:
/// u = <p, f2(x)> / 2 (stationarity of the Hamiltonian with multiplier -1).
inline double control_law(const Vector& x, const Vector& p, const SmoothField& f2) {
  return 0.5 * p.dot(f2.eval(x));
}

/// Normal Hamiltonian <p, f0(x) + f1(x_delayed) + u f2(x)> - u^2.
inline double hamiltonian(const DelayedOCP& ocp, const Vector& x, const Vector& x_delayed,
                          double u, const Vector& p) {
  return p.dot(ocp.f0.eval(x) + ocp.f1.eval(x_delayed) + u * ocp.f2.eval(x)) - u * u;
}

/// Control energy: integral of u^2 over the control grid. Composite Simpson
/// when the step count is even, trapezoid otherwise.
inline double cost_of(const TrajectoryXd& control) {
  const Grid& g = control.grid();
  const auto& u = control.values();
  auto sq = [&](int i) { return u(0, i) * u(0, i); };
  const int n = g.n_steps;
  double acc = 0.0;
  if (n % 2 == 0) {
    for (int i = 0; i + 2 <= n; i += 2) acc += sq(i) + 4.0 * sq(i + 1) + sq(i + 2);
    acc *= g.h / 3.0;
  } else {
    for (int i = 0; i < n; ++i) acc += 0.5 * (sq(i) + sq(i + 1));
    acc *= g.h;
  }
  return acc;
}

/// Integrates the coupled extremal system forward from x(0) = history(0),
/// p(0) = p0:
///
///   x' = f0(x) + f1(x(t - tau)) + u f2(x),          u = <p, f2(x)> / 2,
///   p' = -(df0(x) + u df2(x))^T p - df1(x)^T p_adv(t),
///
/// where the advanced adjoint p_adv(t) = guess(t + tau) is taken from the
/// supplied guess trajectory for t <= horizon - tau and the term is dropped
/// on (horizon - tau, horizon]. For tau = 0 the advanced term collapses to
/// df1(x)^T p(t) and no guess is needed.
inline ExtremalLift integrate_extremal(const DelayedOCP& ocp, double tau, const Vector& p0,
                                       const TrajectoryXd* guess, const Grid& grid) {
  const int n = ocp.n;
  const double T = ocp.horizon;
  const double tol = grid.snap_tol();
  if (p0.size() != n) throw std::invalid_argument("integrate_extremal: p0 dimension mismatch");
  if (tau < 0.0 || tau > ocp.max_delay * (1.0 + 1e-12))
    throw std::invalid_argument("integrate_extremal: tau outside [0, max_delay]");
  if (std::abs(grid.t0) > tol || std::abs(grid.tf - T) > tol)
    throw std::invalid_argument("integrate_extremal: grid must cover [0, horizon]");

  const bool advanced_used = tau > 0.0 && tau < T * (1.0 - 1e-12);
  if (advanced_used) {
    if (guess == nullptr)
      throw std::invalid_argument("integrate_extremal: advanced-term guess required for tau > 0");
    if (guess->start_time() > tol || guess->end_time() < T - tol)
      throw std::invalid_argument("integrate_extremal: guess must cover [0, horizon]");
  }

  const double switch_time = T - tau;
  SegmentRhs<double> rhs = [&, n, tau, switch_time](double t, double t_seg, const Vector& z,
                                                    const Vector& zd) {
    const auto x = z.head(n);
    const auto p = z.tail(n);
    const auto xd = zd.head(n);
    const Vector f2x = ocp.f2.eval(x);
    const double u = 0.5 * p.dot(f2x);

    Vector out(2 * n);
    out.head(n) = ocp.f0.eval(x) + ocp.f1.eval(xd) + u * f2x;

    Matrix a = ocp.f0.jacobian(x);
    if (u != 0.0) a += u * ocp.f2.jacobian(x);
    Vector pdot = -a.transpose() * p;
    if (tau == 0.0) {
      pdot -= ocp.f1.jacobian(x).transpose() * p;
    } else if (advanced_used && t_seg < switch_time) {
      // Advanced term closed by the known guess; only queried for
      // t <= horizon - tau, so t + tau never leaves the guess domain.
      pdot -= ocp.f1.jacobian(x).transpose() * guess->sample(t + tau);
    }
    out.tail(n) = pdot;
    return out;
  };

  Vector z0(2 * n);
  z0.head(n) = ocp.history(0.0);
  z0.tail(n) = p0;
  HistoryFn<double> aug_history = [&ocp, n](double t) {
    Vector z(2 * n);
    z.head(n) = ocp.history(t);
    z.tail(n).setZero();
    return z;
  };

  TrajectoryXd aug = detail::rk4_dde<double>(rhs, tau, z0, aug_history, -ocp.max_delay, grid);

  ExtremalLift lift;
  lift.tau = tau;
  lift.state = TrajectoryXd(grid, aug.values().topRows(n), aug.derivs().topRows(n),
                            ocp.history, -ocp.max_delay);
  lift.adjoint = TrajectoryXd(grid, aug.values().bottomRows(n), aug.derivs().bottomRows(n));

  const int nodes = grid.num_nodes();
  Matrix u_vals(1, nodes), u_ders(1, nodes);
  for (int i = 0; i < nodes; ++i) {
    const auto x = lift.state.node(i);
    const auto p = lift.adjoint.node(i);
    const auto xdot = lift.state.node_deriv(i);
    const auto pdot = lift.adjoint.node_deriv(i);
    const Vector f2x = ocp.f2.eval(x);
    u_vals(0, i) = 0.5 * p.dot(f2x);
    u_ders(0, i) = 0.5 * (pdot.dot(f2x) + p.dot(ocp.f2.jacobian(x) * xdot));
  }
  lift.control = TrajectoryXd(grid, std::move(u_vals), std::move(u_ders));
  lift.cost = cost_of(lift.control);
  return lift;
}

/// Solves the mixed-type extremal system self-consistently: starting from the
/// supplied guess, the advanced term is repeatedly re-closed with the adjoint
/// just computed until the adjoint trajectory stops changing. The returned
/// lift satisfies p_adv(t) = p(t + tau) up to the settle tolerance, so the
/// terminal state is a well-posed function of p0 alone.
inline ExtremalLift solve_mixed_extremal(const DelayedOCP& ocp, double tau, const Vector& p0,
                                         const TrajectoryXd* guess, const Grid& grid,
                                         int max_substitutions = 60,
                                         double settle_tol = 3e-15) {
  ExtremalLift lift = integrate_extremal(ocp, tau, p0, guess, grid);
  if (tau <= 0.0 || tau >= ocp.horizon * (1.0 - 1e-12)) return lift;  // no advanced term

  double prev_change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_substitutions; ++it) {
    ExtremalLift next = integrate_extremal(ocp, tau, p0, &lift.adjoint, grid);
    const double change =
        (next.adjoint.values() - lift.adjoint.values()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, lift.adjoint.values().cwiseAbs().maxCoeff());
    lift = std::move(next);
    if (change <= settle_tol * scale) return lift;
    // Rounding floor: contraction has bottomed out below any useful level.
    if (change >= prev_change && change <= 1e-12 * scale) return lift;
    prev_change = change;
  }
  if (prev_change > 1e-8 * std::max(1.0, lift.adjoint.values().cwiseAbs().maxCoeff()))
    throw SubstitutionError();
  return lift;
}

}  // namespace docp
