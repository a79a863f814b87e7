#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "docp/grid.hpp"
#include "docp/trajectory.hpp"

namespace docp {

/// Thrown when an integration produces a non-finite state.
struct DivergenceError : std::runtime_error {
  double time;
  explicit DivergenceError(double t)
      : std::runtime_error("integration diverged near t = " + std::to_string(t)), time(t) {}
};

/// Right-hand side f(t, y(t), y(t - tau)).
template <typename Scalar>
using DdeRhs = std::function<Eigen::VectorX<Scalar>(double, const Eigen::VectorX<Scalar>&,
                                                    const Eigen::VectorX<Scalar>&)>;

/// Right-hand side with segment context: f(t, t_seg, y, y_delayed), where
/// t_seg is the midpoint of the RK step being taken. Piecewise-defined
/// systems switch branches on t_seg so that a step never mixes branches even
/// when a stage lands exactly on the breakpoint.
template <typename Scalar>
using SegmentRhs = std::function<Eigen::VectorX<Scalar>(double, double,
                                                        const Eigen::VectorX<Scalar>&,
                                                        const Eigen::VectorX<Scalar>&)>;

template <typename Scalar>
using HistoryFn = std::function<Eigen::VectorX<Scalar>(double)>;

namespace detail {

/// Classical RK4 over a fixed grid with method-of-steps delayed lookups.
///
/// Requirements on tau: either 0 (the delayed argument is the current state),
/// a positive integer multiple of grid.h (delayed lookups then always land on
/// completed segments), or >= grid span (all lookups fall into the history).
///
/// Delayed lookups that land exactly on the grid start are one-sided: a stage
/// at the right end of a step reads the history limit, a stage at the left
/// end reads the first node value. For continuous history/value joins the two
/// agree; discontinuous extensions (e.g. the zero extension of a transition
/// matrix) get the branch consistent with the step being integrated.
template <typename Scalar>
Trajectory<Scalar> rk4_dde(const SegmentRhs<Scalar>& rhs, double tau,
                           const Eigen::VectorX<Scalar>& y0, const HistoryFn<Scalar>& history,
                           double history_start, const Grid& g) {
  using VecX = Eigen::VectorX<Scalar>;
  using MatX = Eigen::MatrixX<Scalar>;

  const auto d = y0.size();
  const int n_nodes = g.num_nodes();
  MatX values(d, n_nodes);
  MatX derivs(d, n_nodes);
  values.col(0) = y0;

  enum class DelayMode { None, Aligned, AllHistory };
  DelayMode mode = DelayMode::None;
  long m = 0;
  if (tau < 0.0) throw std::invalid_argument("rk4_dde: tau must be non-negative");
  if (tau > 0.0) {
    if (tau >= g.span() * (1.0 - 1e-12)) {
      mode = DelayMode::AllHistory;
    } else {
      m = std::llround(tau / g.h);
      if (m < 1 || std::abs(m * g.h - tau) > 1e-9 * std::max(1.0, tau))
        throw std::invalid_argument(
            "rk4_dde: tau must be an integer multiple of the grid step (got tau = " +
            std::to_string(tau) + ", h = " + std::to_string(g.h) + ")");
      mode = DelayMode::Aligned;
    }
  }

  const double tol = g.snap_tol();
  auto history_at = [&](double td) -> VecX {
    if (!history)
      throw std::out_of_range("rk4_dde: delayed time before grid start and no history given");
    if (td < history_start - tol)
      throw std::out_of_range("rk4_dde: delayed time before history start");
    return history(td);
  };

  // from_left marks stages at the right end of a step; see note above.
  auto delayed_at = [&](double td, bool from_left) -> VecX {
    const long j = g.nearest_node(td);
    if (g.on_node(td, j)) {
      if (j == 0 && from_left) return history ? history_at(g.t0) : VecX(values.col(0));
      return values.col(j);
    }
    if (td < g.t0) return history_at(td);
    VecX out(d);
    detail::dense_eval<Scalar>(g, values, derivs, std::min(td, g.tf), out);
    return out;
  };

  VecX y = y0;
  VecX y_stage(d);
  for (int i = 0; i < g.n_steps; ++i) {
    const double a = g.node_time(i);
    const double b = g.node_time(i + 1);
    const double mid = a + 0.5 * g.h;

    VecX k1, k2, k3, k4;
    if (mode == DelayMode::None) {
      k1 = rhs(a, mid, y, y);
      derivs.col(i) = k1;
      y_stage = y + (0.5 * g.h) * k1;
      k2 = rhs(mid, mid, y_stage, y_stage);
      y_stage = y + (0.5 * g.h) * k2;
      k3 = rhs(mid, mid, y_stage, y_stage);
      y_stage = y + g.h * k3;
      k4 = rhs(b, mid, y_stage, y_stage);
    } else {
      k1 = rhs(a, mid, y, delayed_at(a - tau, false));
      derivs.col(i) = k1;
      const VecX y_del_mid = delayed_at(mid - tau, false);
      y_stage = y + (0.5 * g.h) * k1;
      k2 = rhs(mid, mid, y_stage, y_del_mid);
      y_stage = y + (0.5 * g.h) * k2;
      k3 = rhs(mid, mid, y_stage, y_del_mid);
      y_stage = y + g.h * k3;
      k4 = rhs(b, mid, y_stage, delayed_at(b - tau, true));
    }

    y += (g.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) throw DivergenceError(b);
    values.col(i + 1) = y;
  }

  // Terminal node derivative, evaluated with the last step's branch.
  const double last_mid = g.node_time(g.n_steps - 1) + 0.5 * g.h;
  if (mode == DelayMode::None) {
    derivs.col(g.n_steps) = rhs(g.tf, last_mid, y, y);
  } else {
    derivs.col(g.n_steps) = rhs(g.tf, last_mid, y, delayed_at(g.tf - tau, true));
  }

  if (history) {
    return Trajectory<Scalar>(g, std::move(values), std::move(derivs), history, history_start);
  }
  return Trajectory<Scalar>(g, std::move(values), std::move(derivs));
}

}  // namespace detail

/// Integrates y'(t) = rhs(t, y(t), y(t - tau)) over the grid with classical
/// RK4 and Hermite dense output for off-grid delayed lookups. For tau = 0 the
/// delayed argument degenerates to the current state.
template <typename Scalar>
Trajectory<Scalar> integrate_dde(const DdeRhs<Scalar>& rhs, double tau,
                                 const Eigen::VectorX<Scalar>& y0,
                                 const HistoryFn<Scalar>& history, double history_start,
                                 const Grid& grid) {
  SegmentRhs<Scalar> wrapped = [&rhs](double t, double, const Eigen::VectorX<Scalar>& y,
                                      const Eigen::VectorX<Scalar>& yd) { return rhs(t, y, yd); };
  return detail::rk4_dde<Scalar>(wrapped, tau, y0, history, history_start, grid);
}

/// Convenience overload starting from the history value at the grid start.
template <typename Scalar>
Trajectory<Scalar> integrate_dde(const DdeRhs<Scalar>& rhs, double tau,
                                 const HistoryFn<Scalar>& history, double history_start,
                                 const Grid& grid) {
  if (!history) throw std::invalid_argument("integrate_dde: history required to seed y0");
  return integrate_dde<Scalar>(rhs, tau, history(grid.t0), history, history_start, grid);
}

}  // namespace docp
