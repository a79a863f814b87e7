#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace docp {

/// Uniform time grid with nodes t_i = t0 + i*h, i = 0..n_steps.
/// The last node is pinned to tf exactly so that domain checks against the
/// right endpoint never depend on accumulated rounding.
struct Grid {
  double t0 = 0.0;
  double tf = 1.0;
  double h = 1.0;
  int n_steps = 1;

  Grid() = default;

  Grid(double start, double end, int steps) : t0(start), tf(end), n_steps(steps) {
    if (n_steps < 1) throw std::invalid_argument("Grid: n_steps must be >= 1");
    if (!(end > start)) throw std::invalid_argument("Grid: tf must exceed t0");
    if (!std::isfinite(start) || !std::isfinite(end))
      throw std::invalid_argument("Grid: endpoints must be finite");
    h = (tf - t0) / n_steps;
  }

  int num_nodes() const { return n_steps + 1; }
  double span() const { return tf - t0; }

  double node_time(int i) const { return i == n_steps ? tf : t0 + i * h; }

  /// Absolute tolerance used when matching query times against grid nodes.
  double snap_tol() const {
    return 1e-12 * std::max({1.0, std::abs(t0), std::abs(tf)});
  }

  /// Index of the node closest to t (may be outside [0, n_steps]).
  long nearest_node(double t) const { return std::lround((t - t0) / h); }

  bool on_node(double t, long idx) const {
    if (idx < 0 || idx > n_steps) return false;
    return std::abs(t - node_time(static_cast<int>(idx))) <= snap_tol();
  }
};

namespace detail {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

/// Best continued-fraction convergent p/q of x with q <= max_den, stopping
/// early once |x - p/q| <= tol.
inline Rational rational_approx(double x, std::int64_t max_den, double tol) {
  if (!(x > 0.0)) throw std::invalid_argument("rational_approx: x must be positive");
  std::int64_t p_prev = 1, q_prev = 0;
  std::int64_t p = static_cast<std::int64_t>(std::floor(x)), q = 1;
  double frac = x - std::floor(x);
  while (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) > tol) {
    if (frac <= 1e-18) break;
    double inv = 1.0 / frac;
    double a_real = std::floor(inv);
    if (a_real > 9.0e18) break;
    auto a = static_cast<std::int64_t>(a_real);
    frac = inv - a_real;
    if (a > 0 && (q > (max_den - q_prev) / a)) break;  // next denominator too large
    std::int64_t p_next = a * p + p_prev;
    std::int64_t q_next = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
  return {p, q};
}

}  // namespace detail

/// Grid aligned with a delay: both tau and the horizon are integer multiples
/// of the step, which keeps delayed lookups on completed segments and puts
/// every derivative breakpoint (k*tau, T - tau) on a node.
struct DelayGrid {
  Grid grid;
  int delay_steps = 0;  ///< tau / h; -1 when tau >= horizon (no alignment needed)
  double delay = 0.0;   ///< realized delay, snapped to the request when within 1e-9
};

inline DelayGrid make_delay_grid(double horizon, double tau, double base_h) {
  if (!(horizon > 0.0)) throw std::invalid_argument("make_delay_grid: horizon must be positive");
  if (!(base_h > 0.0)) throw std::invalid_argument("make_delay_grid: base_h must be positive");
  if (tau < 0.0) throw std::invalid_argument("make_delay_grid: tau must be non-negative");

  constexpr std::int64_t kMaxDen = 1 << 20;
  constexpr std::int64_t kMaxSteps = 8'000'000;

  if (tau == 0.0) {
    int n = static_cast<int>(std::max<std::int64_t>(1, std::llround(horizon / base_h)));
    return {Grid(0.0, horizon, n), 0, 0.0};
  }
  if (tau >= horizon * (1.0 - 1e-12)) {
    // Delayed lookups never leave the history; no alignment constraint.
    int n = static_cast<int>(std::max<std::int64_t>(1, std::llround(horizon / base_h)));
    return {Grid(0.0, horizon, n), -1, tau};
  }

  auto [p, q] = detail::rational_approx(tau / horizon, kMaxDen, 1e-12);
  if (p < 1) {
    p = 1;  // tau/horizon below 1/kMaxDen: force at least one delay step
    q = std::min<std::int64_t>(kMaxDen, std::llround(horizon / tau));
  }
  std::int64_t k = std::max<std::int64_t>(1, std::llround(horizon / (static_cast<double>(q) * base_h)));
  while (q * k > kMaxSteps && k > 1) --k;
  std::int64_t n = q * k;
  if (n > kMaxSteps)
    throw std::invalid_argument("make_delay_grid: delay/horizon ratio requires too fine a grid");

  Grid g(0.0, horizon, static_cast<int>(n));
  auto m = static_cast<int>(p * k);
  double realized = m * g.h;
  if (std::abs(realized - tau) <= 1e-9 * std::max(1.0, tau)) realized = tau;
  return {g, m, realized};
}

}  // namespace docp
