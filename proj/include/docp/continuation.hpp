#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "docp/grid.hpp"
#include "docp/shooting.hpp"

namespace docp {

struct ContinuationOptions {
  double dtau_init = 0.0;  ///< <= 0: tau_target / 10
  double dtau_min = 0.0;   ///< <= 0: tau_target / 1000
  int refine_passes = 1;   ///< inner re-shoots with the refreshed adjoint guess
  double refine_tol = 1e-8;
  double base_h = 0.0;  ///< <= 0: horizon / 2000
  ShootingOptions shooting;
  std::function<void(const std::string&)> log;  ///< optional step logging
};

struct ContinuationStep {
  double tau = 0.0;
  ShootingResult result;
};

/// Ordered record of the delay homotopy. Stored steps all converged; taus are
/// strictly increasing starting at 0, and the last one equals target_tau when
/// succeeded is set.
struct ContinuationTrace {
  std::vector<ContinuationStep> steps;
  double target_tau = 0.0;
  bool succeeded = false;
};

namespace detail {

inline double resolved_base_h(const DelayedOCP& ocp, const ContinuationOptions& opts) {
  return opts.base_h > 0.0 ? opts.base_h : ocp.horizon / 2000.0;
}

inline double max_node_distance(const TrajectoryXd& a, const TrajectoryXd& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

inline void log_line(const ContinuationOptions& opts, const std::string& msg) {
  if (opts.log) opts.log(msg);
}

}  // namespace detail

/// Solves the non-delayed problem by plain shooting (no guess needed).
inline ShootingResult solve_nondelayed(const DelayedOCP& ocp, const Vector& p0_init,
                                       const ContinuationOptions& opts = {}) {
  const double h = detail::resolved_base_h(ocp, opts);
  const auto n = static_cast<int>(std::max<long>(1, std::lround(ocp.horizon / h)));
  Grid grid(0.0, ocp.horizon, n);
  return newton_solve(ocp, 0.0, p0_init, nullptr, grid, opts.shooting);
}

/// Delay homotopy: solve at tau = 0, then march tau towards tau_target,
/// warm-starting each shoot with the previous initial adjoint and using the
/// previous adjoint trajectory as the advanced-term guess. The step shrinks
/// on failure and regrows after successes; `checkpoints` forces specific
/// delays to be visited exactly. Failures are encoded in the trace, never
/// thrown.
inline ContinuationTrace continuation_solve(const DelayedOCP& ocp, double tau_target,
                                            const Vector& p0_init,
                                            const ContinuationOptions& opts = {},
                                            const std::vector<double>& checkpoints = {}) {
  if (!(tau_target > 0.0) || tau_target > ocp.max_delay * (1.0 + 1e-12))
    throw std::invalid_argument("continuation_solve: tau_target must lie in (0, max_delay]");

  const double base_h = detail::resolved_base_h(ocp, opts);
  const double dtau_init = opts.dtau_init > 0.0 ? opts.dtau_init : tau_target / 10.0;
  double dtau_min = opts.dtau_min > 0.0 ? opts.dtau_min : tau_target / 1000.0;
  dtau_min = std::min(dtau_min, dtau_init);

  std::vector<double> marks = checkpoints;
  std::sort(marks.begin(), marks.end());

  ContinuationTrace trace;
  trace.target_tau = tau_target;

  ShootingResult base = solve_nondelayed(ocp, p0_init, opts);
  detail::log_line(opts, "tau=0 converged=" + std::string(base.converged ? "1" : "0") +
                             " iters=" + std::to_string(base.iterations) +
                             " cost=" + std::to_string(base.lift.cost));
  if (!base.converged) return trace;  // cannot start
  trace.steps.push_back({0.0, base});

  double tau = 0.0;
  double dtau = dtau_init;
  const double done_tol = 1e-9 * std::max(1.0, tau_target);
  while (tau < tau_target - done_tol) {
    double tau_next = std::min(tau + dtau, tau_target);
    for (double mark : marks) {
      if (mark > tau + done_tol) {
        tau_next = std::min(tau_next, mark);
        break;
      }
    }
    if (std::abs(tau_next - tau_target) <= done_tol) tau_next = tau_target;
    for (double mark : marks)
      if (std::abs(tau_next - mark) <= done_tol) tau_next = mark;

    bool ok = false;
    const ShootingResult& prev = trace.steps.back().result;
    try {
      DelayGrid dg = make_delay_grid(ocp.horizon, tau_next, base_h);
      ShootingResult step =
          newton_solve(ocp, dg.delay, prev.p0, &prev.lift.adjoint, dg.grid, opts.shooting);
      if (step.converged) {
        for (int pass = 0; pass < opts.refine_passes; ++pass) {
          ShootingResult refined;
          try {
            refined = newton_solve(ocp, dg.delay, step.p0, &step.lift.adjoint, dg.grid,
                                   opts.shooting);
          } catch (const std::runtime_error&) {
            break;  // keep the converged result from before the pass
          }
          if (!refined.converged) break;
          const double change = detail::max_node_distance(refined.lift.adjoint, step.lift.adjoint);
          step = std::move(refined);
          if (change <= opts.refine_tol) break;
        }
        trace.steps.push_back({tau_next, std::move(step)});
        ok = true;
      }
    } catch (const std::runtime_error&) {
      ok = false;  // divergence or singular Jacobian: treat as a failed step
    }

    if (ok) {
      detail::log_line(opts, "tau=" + std::to_string(tau_next) + " converged=1 iters=" +
                                 std::to_string(trace.steps.back().result.iterations) +
                                 " cost=" + std::to_string(trace.steps.back().result.lift.cost));
      tau = tau_next;
      dtau = std::min(dtau * 1.5, dtau_init);
    } else {
      detail::log_line(opts, "tau=" + std::to_string(tau_next) + " failed; halving step");
      dtau *= 0.5;
      if (dtau < dtau_min) return trace;  // partial trace, succeeded stays false
    }
  }
  trace.succeeded = true;
  return trace;
}

}  // namespace docp
