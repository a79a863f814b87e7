#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "docp/extremal.hpp"
#include "docp/problem.hpp"

namespace docp {

struct SingularJacobianError : std::runtime_error {
  SingularJacobianError() : std::runtime_error("shooting Jacobian is numerically singular") {}
};

struct ShootingOptions {
  double residual_tol_abs = 1e-6;
  double residual_tol_rel = 1e-9;  ///< scaled by ||target||
  int max_iterations = 50;
  double fd_step = 1e-6;  ///< scaled per component by max(1, |p0_i|)
  int max_backtracks = 20;
  int max_substitutions = 60;     ///< advanced-term settle iterations per evaluation
  double substitution_tol = 3e-15;

  void check() const {
    if (!(residual_tol_abs > 0.0) || !(residual_tol_rel > 0.0))
      throw std::invalid_argument("ShootingOptions: tolerances must be positive");
    if (max_iterations < 1 || max_backtracks < 1)
      throw std::invalid_argument("ShootingOptions: iteration counts must be >= 1");
    if (!(fd_step > 0.0)) throw std::invalid_argument("ShootingOptions: fd_step must be positive");
    if (max_substitutions < 1 || !(substitution_tol > 0.0))
      throw std::invalid_argument("ShootingOptions: substitution controls must be positive");
  }
};

/// Outcome of one damped-Newton shooting solve. `lift` is the extremal
/// generated by the returned p0; its terminal state equals target + residual
/// exactly. `residual_history` records the norm at the initial point and
/// after each accepted iterate.
struct ShootingResult {
  Vector p0;
  Vector residual;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  ExtremalLift lift;
  std::vector<double> residual_history;
};

namespace detail {

/// The extremal a shooting evaluation linearizes: self-consistent in the
/// advanced term, warm-started from the supplied guess.
inline ExtremalLift shooting_lift(const DelayedOCP& ocp, double tau, const Vector& p0,
                                  const TrajectoryXd* guess, const Grid& grid,
                                  const ShootingOptions& opts) {
  return solve_mixed_extremal(ocp, tau, p0, guess, grid, opts.max_substitutions,
                              opts.substitution_tol);
}

}  // namespace detail

/// Terminal defect x(T) - target of the (self-consistent) extremal generated
/// by p0.
inline Vector shooting_residual(const DelayedOCP& ocp, double tau, const Vector& p0,
                                const TrajectoryXd* guess, const Grid& grid,
                                const ShootingOptions& opts = {}) {
  ExtremalLift lift = detail::shooting_lift(ocp, tau, p0, guess, grid, opts);
  return lift.state.node(grid.n_steps) - ocp.target;
}

/// Central-difference Jacobian of the shooting residual in p0. The supplied
/// guess seeds the advanced-term closure identically for every perturbed
/// evaluation.
inline Matrix fd_jacobian(const DelayedOCP& ocp, double tau, const Vector& p0,
                          const TrajectoryXd* guess, const Grid& grid,
                          const ShootingOptions& opts = {}) {
  const int n = ocp.n;
  Matrix jac(n, n);
  Vector probe = p0;
  for (int j = 0; j < n; ++j) {
    const double step = opts.fd_step * std::max(1.0, std::abs(p0[j]));
    probe[j] = p0[j] + step;
    const Vector rp = shooting_residual(ocp, tau, probe, guess, grid, opts);
    probe[j] = p0[j] - step;
    const Vector rm = shooting_residual(ocp, tau, probe, guess, grid, opts);
    probe[j] = p0[j];
    jac.col(j) = (rp - rm) / (2.0 * step);
  }
  return jac;
}

namespace detail {

struct StepCandidate {
  bool valid = false;
  Vector p0;
  Vector residual;
  double norm = std::numeric_limits<double>::infinity();
  ExtremalLift lift;
};

}  // namespace detail

/// Damped Newton on p(0). Each iteration factors the finite-difference
/// Jacobian once (column-equilibrated SVD) and then globalizes in two
/// stages: a halving search along the pure Newton direction that keeps the
/// best candidate seen, and, when that search makes only marginal progress,
/// Levenberg-damped steps with an increasing damping ladder. The second
/// stage covers warm starts where the shooting Jacobian is so ill
/// conditioned (scaled condition numbers beyond 1e9 occur for delayed
/// extremals) that the undamped direction leaves the linear regime; the
/// first preserves plain Newton behavior everywhere else. Non-convergence
/// is reported through the flag, not thrown; an identically zero Jacobian
/// or divergence of the unperturbed residual is thrown.
inline ShootingResult newton_solve(const DelayedOCP& ocp, double tau, const Vector& p0_init,
                                   const TrajectoryXd* guess, const Grid& grid,
                                   const ShootingOptions& opts = {}) {
  opts.check();
  const int n = ocp.n;
  const double tol = opts.residual_tol_abs + opts.residual_tol_rel * ocp.target.norm();

  ShootingResult res;
  res.p0 = p0_init;
  res.lift = detail::shooting_lift(ocp, tau, res.p0, guess, grid, opts);
  res.residual = res.lift.state.node(grid.n_steps) - ocp.target;
  res.residual_norm = res.residual.norm();
  res.residual_history.push_back(res.residual_norm);

  double lambda = 0.0;
  while (true) {
    if (res.residual_norm <= tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= opts.max_iterations) return res;

    const Matrix jac = fd_jacobian(ocp, tau, res.p0, guess, grid, opts);
    if (!(jac.norm() > 0.0)) throw SingularJacobianError();
    Vector col_scale(n);
    for (int j = 0; j < n; ++j) {
      const double cn = jac.col(j).norm();
      col_scale[j] = cn > 0.0 ? cn : 1.0;
    }
    Eigen::JacobiSVD<Matrix> svd(jac * col_scale.cwiseInverse().asDiagonal(),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sig = svd.singularValues();
    if (!(sig(0) > 0.0)) throw SingularJacobianError();
    const Vector proj = svd.matrixU().transpose() * (-res.residual);

    auto try_step = [&](const Vector& dp) {
      detail::StepCandidate cand;
      cand.p0 = res.p0 + dp;
      try {
        cand.lift = detail::shooting_lift(ocp, tau, cand.p0, guess, grid, opts);
        cand.residual = cand.lift.state.node(grid.n_steps) - ocp.target;
        const double norm = cand.residual.norm();
        if (std::isfinite(norm)) {
          cand.norm = norm;
          cand.valid = true;
        }
      } catch (const DivergenceError&) {
      } catch (const SubstitutionError&) {
      }
      return cand;
    };

    auto damped_step = [&](double lam) {
      Vector gain(n);
      for (int i = 0; i < n; ++i) {
        const double s = sig(i);
        gain[i] = (s == 0.0 && lam == 0.0) ? 0.0 : s / (s * s + lam);
      }
      return Vector(col_scale.cwiseInverse().asDiagonal() *
                    (svd.matrixV() * gain.cwiseProduct(proj)));
    };

    // Stage one: halve along the Newton direction, keeping the best
    // candidate; the residual valley can sit well below the first step
    // size that merely decreases.
    const Vector newton_dir = damped_step(0.0);
    detail::StepCandidate best;
    double alpha = 1.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
      detail::StepCandidate cand = try_step(alpha * newton_dir);
      if (cand.valid && cand.norm < std::min(best.norm, res.residual_norm)) {
        best = std::move(cand);
      } else if (best.valid) {
        break;  // past the valley
      }
    }

    // Stage two: Levenberg ladder when the Newton direction stalls.
    const bool marginal =
        !best.valid || (res.residual_norm - best.norm) < 2e-3 * res.residual_norm;
    if (marginal) {
      double lam = lambda > 0.0 ? lambda : 1e-4;
      for (int bt = 0; bt < opts.max_backtracks && lam < 1e14; ++bt, lam *= 10.0) {
        detail::StepCandidate cand = try_step(damped_step(lam));
        if (cand.valid && cand.norm < std::min(best.norm, res.residual_norm)) {
          best = std::move(cand);
          lambda = lam * 0.1;
          break;
        }
      }
    } else {
      lambda = lambda < 1e-14 ? 0.0 : lambda * 0.1;
    }

    if (!best.valid) return res;  // neither stage made progress
    res.p0 = std::move(best.p0);
    res.lift = std::move(best.lift);
    res.residual = std::move(best.residual);
    res.residual_norm = best.norm;

    ++res.iterations;
    res.residual_history.push_back(res.residual_norm);
  }
}

}  // namespace docp
