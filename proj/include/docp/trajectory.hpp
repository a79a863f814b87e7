#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "docp/grid.hpp"

namespace docp {

namespace detail {

/// Cubic Hermite evaluation on the grid segment containing t. Assumes t has
/// already been clamped into [t0, tf]; snaps to the node value when t matches
/// a node so that node queries reproduce stored values bit for bit.
template <typename Scalar>
void dense_eval(const Grid& g, const Eigen::MatrixX<Scalar>& values,
                const Eigen::MatrixX<Scalar>& derivs, double t,
                Eigen::Ref<Eigen::VectorX<Scalar>> out) {
  const long near = g.nearest_node(t);
  if (g.on_node(t, near)) {
    out = values.col(near);
    return;
  }
  auto seg = static_cast<long>(std::floor((t - g.t0) / g.h));
  seg = std::max<long>(0, std::min<long>(seg, g.n_steps - 1));
  const double sigma = (t - g.node_time(static_cast<int>(seg))) / g.h;
  const double s2 = sigma * sigma;
  const double s3 = s2 * sigma;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + sigma;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  out = h00 * values.col(seg) + (g.h * h10) * derivs.col(seg) +
        h01 * values.col(seg + 1) + (g.h * h11) * derivs.col(seg + 1);
}

}  // namespace detail

/// Time-gridded vector function with cubic Hermite dense output.
///
/// Node values and node derivatives are stored column-wise (one column per
/// node). Queries left of the grid fall through to an optional history
/// function, so a single object can cover [-M, T] for a delayed system.
/// Immutable after construction.
template <typename Scalar>
class Trajectory {
 public:
  using VecX = Eigen::VectorX<Scalar>;
  using MatX = Eigen::MatrixX<Scalar>;
  using HistoryFn = std::function<VecX(double)>;

  Trajectory() = default;

  Trajectory(Grid grid, MatX values, MatX derivs)
      : grid_(grid), values_(std::move(values)), derivs_(std::move(derivs)) {
    if (values_.cols() != grid_.num_nodes() || derivs_.cols() != grid_.num_nodes())
      throw std::invalid_argument("Trajectory: node count does not match grid");
    if (values_.rows() != derivs_.rows())
      throw std::invalid_argument("Trajectory: values/derivs dimension mismatch");
  }

  Trajectory(Grid grid, MatX values, MatX derivs, HistoryFn history, double history_start)
      : Trajectory(grid, std::move(values), std::move(derivs)) {
    history_ = std::move(history);
    history_start_ = history_start;
  }

  const Grid& grid() const { return grid_; }
  Eigen::Index dim() const { return values_.rows(); }
  const MatX& values() const { return values_; }
  const MatX& derivs() const { return derivs_; }
  auto node(int i) const { return values_.col(i); }
  auto node_deriv(int i) const { return derivs_.col(i); }
  double start_time() const { return grid_.t0; }
  double end_time() const { return grid_.tf; }
  bool has_history() const { return static_cast<bool>(history_); }
  double history_start() const { return history_start_; }
  VecX history_value(double t) const { return history_(t); }

  void sample_into(double t, Eigen::Ref<VecX> out) const {
    const double tol = grid_.snap_tol();
    if (t < grid_.t0 - tol) {
      if (!history_)
        throw std::out_of_range("Trajectory::sample: t before grid start and no history attached");
      if (t < history_start_ - tol)
        throw std::out_of_range("Trajectory::sample: t before history start");
      out = history_(t);
      return;
    }
    if (t > grid_.tf + tol) throw std::out_of_range("Trajectory::sample: t beyond grid end");
    const double tc = std::min(std::max(t, grid_.t0), grid_.tf);
    detail::dense_eval<Scalar>(grid_, values_, derivs_, tc, out);
  }

  VecX sample(double t) const {
    VecX out(values_.rows());
    sample_into(t, out);
    return out;
  }

 private:
  Grid grid_;
  MatX values_;
  MatX derivs_;
  HistoryFn history_;
  double history_start_ = -std::numeric_limits<double>::infinity();
};

using TrajectoryXd = Trajectory<double>;

}  // namespace docp
