#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "docp/extremal.hpp"
#include "docp/integrate.hpp"
#include "docp/problem.hpp"

namespace docp {

/// Matrix solution X(t, s) of the linearized delay system anchored at s:
///
///   X'(t, s) = A1(t) X(t, s) + A2(t) X(t - tau, s),
///   X(s, s) = I,   X(t, s) = 0 for t < s,
///
/// with A1(t) = df0(x(t)) + u(t) df2(x(t)) and A2(t) = df1(x(t - tau)).
/// Stored flattened (column-major) as an n^2-dimensional trajectory on [s, T].
struct TransitionTrajectory {
  TrajectoryXd flat;
  int n = 0;
  double anchor = 0.0;
  bool point_only = false;  ///< anchor == horizon: only X(T, T) = I exists

  Matrix at(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(anchor));
    if (t < anchor - tol) return Matrix::Zero(n, n);
    if (point_only) {
      if (t > anchor + tol) throw std::out_of_range("TransitionTrajectory: t beyond horizon");
      return Matrix::Identity(n, n);
    }
    const Vector v = flat.sample(t);
    return Eigen::Map<const Matrix>(v.data(), n, n);
  }

  Matrix terminal() const {
    if (point_only) return Matrix::Identity(n, n);
    const auto& col = flat.values().col(flat.grid().n_steps);
    return Eigen::Map<const Matrix>(col.data(), n, n);
  }
};

/// Integrates the linearized delay system along a solved trajectory from
/// anchor time s (a grid node) to the horizon. The delayed matrix argument is
/// zero-extended below s.
inline TransitionTrajectory integrate_variational(const DelayedOCP& ocp, double tau,
                                                  const TrajectoryXd& state,
                                                  const TrajectoryXd& control, double s,
                                                  const Grid& grid) {
  const int n = ocp.n;
  const long j0 = grid.nearest_node(s);
  if (!grid.on_node(s, j0))
    throw std::invalid_argument("integrate_variational: anchor s must be a grid node");

  TransitionTrajectory result;
  result.n = n;
  result.anchor = grid.node_time(static_cast<int>(j0));
  if (j0 == grid.n_steps) {
    result.point_only = true;
    return result;
  }

  const Grid sub(result.anchor, grid.tf, grid.n_steps - static_cast<int>(j0));

  // Coefficient tables at the RK stage times (nodes and midpoints of sub).
  const int half_steps = 2 * sub.n_steps + 1;
  std::vector<Matrix> a1(half_steps), a2(half_steps);
  for (int k = 0; k < half_steps; ++k) {
    const double t = std::min(sub.t0 + 0.5 * k * sub.h, sub.tf);
    const Vector x = state.sample(t);
    const double u = control.sample(t)(0);
    Matrix m1 = ocp.f0.jacobian(x);
    if (u != 0.0) m1 += u * ocp.f2.jacobian(x);
    a1[k] = std::move(m1);
    a2[k] = ocp.f1.jacobian(state.sample(t - tau));
  }

  SegmentRhs<double> rhs = [&](double t, double, const Vector& z, const Vector& zd) {
    auto k = static_cast<int>(std::lround(2.0 * (t - sub.t0) / sub.h));
    k = std::max(0, std::min(k, half_steps - 1));
    Eigen::Map<const Matrix> x_mat(z.data(), n, n);
    Eigen::Map<const Matrix> xd_mat(zd.data(), n, n);
    Matrix dot = a1[k] * x_mat;
    dot.noalias() += a2[k] * xd_mat;
    return Vector(Eigen::Map<const Vector>(dot.data(), n * n));
  };

  Matrix eye = Matrix::Identity(n, n);
  Vector z0 = Eigen::Map<const Vector>(eye.data(), n * n);
  HistoryFn<double> zero_ext = [n](double) { return Vector(Vector::Zero(n * n)); };

  result.flat = detail::rk4_dde<double>(rhs, tau, z0, zero_ext,
                                        -std::numeric_limits<double>::infinity(), sub);
  return result;
}

namespace detail {

/// Composite Simpson on possibly unevenly spaced samples (parabola through
/// each consecutive triple); a trailing lone interval fall back to trapezoid.
template <typename T>
T quad_simpson(const std::vector<double>& ts, const std::vector<T>& fs) {
  if (ts.size() != fs.size() || ts.size() < 2)
    throw std::invalid_argument("quad_simpson: need matching samples, at least two");
  const std::size_t last = ts.size() - 1;
  T acc = fs[0] * 0.0;
  std::size_t k = 0;
  while (k + 2 <= last) {
    const double h1 = ts[k + 1] - ts[k];
    const double h2 = ts[k + 2] - ts[k + 1];
    const double hs = h1 + h2;
    acc += (hs / 6.0) * ((2.0 - h2 / h1) * fs[k] + (hs * hs / (h1 * h2)) * fs[k + 1] +
                         (2.0 - h1 / h2) * fs[k + 2]);
    k += 2;
  }
  if (k + 1 == last) acc += 0.5 * (ts[k + 1] - ts[k]) * (fs[k] + fs[k + 1]);
  return acc;
}

/// Anchor node indices for the end-point quadrature: every stride-th node,
/// always including the endpoints, with at most max_solves + 1 anchors.
inline std::vector<int> anchor_nodes(int n_steps, int max_solves) {
  const int stride = std::max(1, (n_steps + max_solves - 1) / max_solves);
  std::vector<int> idx;
  for (int i = 0; i < n_steps; i += stride) idx.push_back(i);
  idx.push_back(n_steps);
  return idx;
}

}  // namespace detail

/// Derivative of the end-point mapping in the control direction v:
///
///   dE_T(v) = integral over [0, T] of X(T, s) f2(x(s)) v(s) ds,
///
/// evaluated by forward variational solves from a subsampled set of anchor
/// times and Simpson quadrature on those anchors.
inline Vector endpoint_derivative(const DelayedOCP& ocp, double tau, const ExtremalLift& lift,
                                  const TrajectoryXd& v, const Grid& grid,
                                  int max_anchor_solves = 200) {
  const std::vector<int> anchors = detail::anchor_nodes(grid.n_steps, max_anchor_solves);
  std::vector<double> ts;
  std::vector<Vector> gs;
  ts.reserve(anchors.size());
  gs.reserve(anchors.size());
  for (int idx : anchors) {
    const double s = grid.node_time(idx);
    TransitionTrajectory x_s = integrate_variational(ocp, tau, lift.state, lift.control, s, grid);
    const Vector f2x = ocp.f2.eval(lift.state.node(idx));
    ts.push_back(s);
    gs.push_back(x_s.terminal() * f2x * v.sample(s)(0));
  }
  return detail::quad_simpson(ts, gs);
}

struct GramianResult {
  Matrix gramian;
  double lambda_min = 0.0;
  bool surjective = false;
};

/// Controllability Gramian G = integral of X(T,s) f2 f2^T X(T,s)^T ds along
/// the lift, with its smallest eigenvalue. Positive definiteness certifies
/// surjectivity of the end-point derivative; the reported flag uses the
/// threshold lambda_min > 1e-10 * trace(G) / n.
inline GramianResult controllability_gramian(const DelayedOCP& ocp, double tau,
                                             const ExtremalLift& lift, const Grid& grid,
                                             int max_anchor_solves = 200) {
  const std::vector<int> anchors = detail::anchor_nodes(grid.n_steps, max_anchor_solves);
  std::vector<double> ts;
  std::vector<Matrix> gs;
  ts.reserve(anchors.size());
  gs.reserve(anchors.size());
  for (int idx : anchors) {
    const double s = grid.node_time(idx);
    TransitionTrajectory x_s = integrate_variational(ocp, tau, lift.state, lift.control, s, grid);
    const Vector w = x_s.terminal() * ocp.f2.eval(lift.state.node(idx));
    ts.push_back(s);
    gs.push_back(w * w.transpose());
  }
  GramianResult res;
  res.gramian = detail::quad_simpson(ts, gs);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(res.gramian);
  res.lambda_min = eig.eigenvalues().minCoeff();
  res.surjective = res.lambda_min > 1e-10 * res.gramian.trace() / ocp.n;
  return res;
}

}  // namespace docp
