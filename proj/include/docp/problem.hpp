#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace docp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A smooth vector field R^n -> R^n with a user-supplied Jacobian.
/// Jacobian convention: jacobian(x)(i, j) = d f_i / d x_j.
struct SmoothField {
  std::function<Vector(const Vector&)> eval;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Fixed-delay single-input control-affine optimal control problem:
///
///   x'(t) = f0(x(t)) + f1(x(t - tau)) + u(t) f2(x(t)),   x = history on [-max_delay, 0],
///
/// steered to `target` at t = horizon while minimizing the control energy
/// integral of u^2. Immutable after construction; the field and history
/// handles must be re-entrant.
struct DelayedOCP {
  int n = 0;
  SmoothField f0, f1, f2;
  std::function<Vector(double)> history;  ///< defined on [-max_delay, 0]
  double max_delay = 0.0;                 ///< upper bound M on admissible delays
  double horizon = 0.0;                   ///< terminal time T
  Vector target;                          ///< prescribed x(T)
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool valid() const { return violations.empty(); }
};

struct ValidateOptions {
  int jacobian_samples = 20;
  double jacobian_tol = 1e-5;
  double sample_radius = 10.0;
  int history_samples = 101;
  /// When > 0, also probe each field for growth on the box of this radius and
  /// warn if it looks unbounded. Off by default; boundedness is not required
  /// by the solver.
  double bounded_box = 0.0;
  unsigned seed = 7;
};

namespace detail {

inline Matrix fd_field_jacobian(const SmoothField& f, const Vector& x) {
  const auto n = x.size();
  Matrix jac(f.eval(x).size(), n);
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    jac.col(j) = (f.eval(xp) - f.eval(xm)) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac;
}

}  // namespace detail

/// Checks a problem instance for the defects the solver cannot tolerate:
/// non-positive horizon/delay bound, non-finite history values, and supplied
/// Jacobians that disagree with finite differences of the fields. Returns a
/// report; an empty violations list means the problem is usable.
inline ValidationReport validate(const DelayedOCP& ocp, const ValidateOptions& opts = {}) {
  ValidationReport report;
  if (ocp.n < 1) report.violations.push_back("n must be at least 1");
  if (!(ocp.max_delay > 0.0)) report.violations.push_back("M must be positive");
  if (!(ocp.horizon > 0.0)) report.violations.push_back("T must be positive");
  if (ocp.target.size() != ocp.n)
    report.violations.push_back("target dimension does not match n");

  if (!ocp.history) {
    report.violations.push_back("history function is missing");
  } else if (ocp.max_delay > 0.0) {
    for (int i = 0; i < opts.history_samples; ++i) {
      const double t = -ocp.max_delay +
                       ocp.max_delay * static_cast<double>(i) / (opts.history_samples - 1);
      Vector v = ocp.history(t);
      if (v.size() != ocp.n) {
        report.violations.push_back("history returns wrong dimension at t = " + std::to_string(t));
        break;
      }
      if (!v.allFinite()) {
        report.violations.push_back("history returns non-finite values at t = " + std::to_string(t));
        break;
      }
    }
  }

  if (ocp.n >= 1) {
    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const char* names[3] = {"f0", "f1", "f2"};
    const SmoothField* fields[3] = {&ocp.f0, &ocp.f1, &ocp.f2};
    for (int fi = 0; fi < 3; ++fi) {
      const SmoothField& f = *fields[fi];
      if (!f.eval || !f.jacobian) {
        report.violations.push_back(std::string(names[fi]) + " is missing eval or jacobian");
        continue;
      }
      double worst = 0.0;
      for (int s = 0; s < opts.jacobian_samples; ++s) {
        Vector x(ocp.n);
        for (int j = 0; j < ocp.n; ++j) x[j] = unif(rng) * opts.sample_radius;
        if (x.norm() > opts.sample_radius) x *= opts.sample_radius / x.norm();
        const Matrix jac = f.jacobian(x);
        const Matrix ref = detail::fd_field_jacobian(f, x);
        const double rel = (ref - jac).norm() / std::max(1.0, jac.norm());
        worst = std::max(worst, rel);
      }
      if (worst > opts.jacobian_tol) {
        report.violations.push_back(std::string(names[fi]) +
                                    " jacobian mismatches finite differences (rel err " +
                                    std::to_string(worst) + ")");
      }

      if (opts.bounded_box > 0.0) {
        auto max_norm_on_ball = [&](double radius) {
          double mx = 0.0;
          std::mt19937 rng2(opts.seed + 1);
          for (int s = 0; s < 64; ++s) {
            Vector x(ocp.n);
            for (int j = 0; j < ocp.n; ++j) x[j] = unif(rng2) * radius;
            mx = std::max(mx, f.eval(x).norm());
          }
          return mx;
        };
        const double inner = max_norm_on_ball(0.5 * opts.bounded_box);
        const double outer = max_norm_on_ball(opts.bounded_box);
        if (outer > 1.8 * std::max(inner, 1e-12) && outer > 1e-9) {
          report.warnings.push_back(std::string(names[fi]) +
                                    " appears unbounded on the sampling box (norm grows with radius)");
        }
      }
    }
  }
  return report;
}

/// Planar rendezvous with delayed steering. State (x, y, theta, delta):
///
///   x' = v0 cos(theta),  y' = v0 sin(theta),
///   theta' = c0 v0 delta(t - tau),  delta' = u.
///
/// The steering channel is the delayed one: f1 = (0, 0, c0 v0 delta, 0).
/// History is constant at `init`.
inline DelayedOCP rendezvous_problem(double v0, double c0, const Eigen::Vector4d& init,
                                     const Eigen::Vector4d& target, double horizon,
                                     double max_delay) {
  if (!(v0 > 0.0)) throw std::invalid_argument("rendezvous_problem: v0 must be positive");
  if (!(c0 > 0.0)) throw std::invalid_argument("rendezvous_problem: c0 must be positive");

  DelayedOCP ocp;
  ocp.n = 4;
  ocp.f0.eval = [v0](const Vector& x) {
    Vector out = Vector::Zero(4);
    out[0] = v0 * std::cos(x[2]);
    out[1] = v0 * std::sin(x[2]);
    return out;
  };
  ocp.f0.jacobian = [v0](const Vector& x) {
    Matrix jac = Matrix::Zero(4, 4);
    jac(0, 2) = -v0 * std::sin(x[2]);
    jac(1, 2) = v0 * std::cos(x[2]);
    return jac;
  };
  ocp.f1.eval = [v0, c0](const Vector& x) {
    Vector out = Vector::Zero(4);
    out[2] = c0 * v0 * x[3];
    return out;
  };
  ocp.f1.jacobian = [v0, c0](const Vector&) {
    Matrix jac = Matrix::Zero(4, 4);
    jac(2, 3) = c0 * v0;
    return jac;
  };
  ocp.f2.eval = [](const Vector&) {
    Vector out = Vector::Zero(4);
    out[3] = 1.0;
    return out;
  };
  ocp.f2.jacobian = [](const Vector&) { return Matrix::Zero(4, 4); };

  Vector init_v = init;
  ocp.history = [init_v](double) { return init_v; };
  ocp.max_delay = max_delay;
  ocp.horizon = horizon;
  ocp.target = target;
  return ocp;
}

}  // namespace docp
