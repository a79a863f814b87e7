#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "docp/integrate.hpp"

using docp::Grid;
using docp::TrajectoryXd;
using Eigen::VectorXd;

namespace {

VectorXd scal(double v) { return VectorXd::Constant(1, v); }

// Plain fixed-step RK4, written independently of the library's integrator.
std::vector<double> reference_rk4(double (*f)(double, double), double y0, const Grid& g) {
  std::vector<double> nodes{y0};
  double y = y0;
  for (int i = 0; i < g.n_steps; ++i) {
    const double t = g.node_time(i);
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * g.h, y + 0.5 * g.h * k1);
    const double k3 = f(t + 0.5 * g.h, y + 0.5 * g.h * k2);
    const double k4 = f(t + g.h, y + g.h * k3);
    y += g.h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    nodes.push_back(y);
  }
  return nodes;
}

// x'(t) = -x(t - 1/2), history cos(t): closed form on [0, 1] by two rounds of
// explicit quadrature (method of steps by hand).
double delayed_cos_exact(double t) {
  const double tau = 0.5;
  const double s05 = std::sin(0.5), c05 = std::cos(0.5);
  if (t <= tau) return 1.0 - std::sin(t - tau) - s05;
  const double x_tau = 1.0 - s05;
  return x_tau - (1.0 - s05) * (t - tau) - std::cos(t - 1.0) + c05;
}

double max_node_error_delayed(int steps) {
  Grid g(0.0, 1.0, steps);
  docp::DdeRhs<double> rhs = [](double, const VectorXd&, const VectorXd& xd) {
    return VectorXd(-xd);
  };
  auto traj = docp::integrate_dde<double>(
      rhs, 0.5, scal(1.0), [](double t) { return VectorXd(scal(std::cos(t))); }, -1.0, g);
  double worst = 0.0;
  for (int i = 0; i <= g.n_steps; ++i) {
    worst = std::max(worst, std::abs(traj.values()(0, i) - delayed_cos_exact(g.node_time(i))));
  }
  return worst;
}

double fitted_slope(const std::vector<double>& hs, const std::vector<double>& errs) {
  // least-squares slope of log2(err) against log2(h)
  const auto n = static_cast<double>(hs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log2(hs[i]), y = std::log2(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("exponential decay, delay unused") {
  Grid g(0.0, 1.0, 100);
  docp::DdeRhs<double> rhs = [](double, const VectorXd& x, const VectorXd&) {
    return VectorXd(-x);
  };
  auto traj =
      docp::integrate_dde<double>(rhs, 0.5, scal(1.0), [](double) { return scal(1.0); }, -1.0, g);
  double worst = 0.0;
  for (int i = 0; i <= g.n_steps; ++i) {
    worst = std::max(worst, std::abs(traj.values()(0, i) - std::exp(-g.node_time(i))));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("method of steps with constant history: x = 1 + t on the first interval") {
  Grid g(0.0, 1.0, 10);
  docp::DdeRhs<double> rhs = [](double, const VectorXd&, const VectorXd& xd) { return xd; };
  auto traj =
      docp::integrate_dde<double>(rhs, 1.0, scal(1.0), [](double) { return scal(1.0); }, -1.0, g);
  for (int i = 0; i <= g.n_steps; ++i) {
    CHECK(std::abs(traj.values()(0, i) - (1.0 + g.node_time(i))) <= 1e-13);
  }
}

TEST_CASE("tau = 0 with delayed = current matches a plain RK4 integrator") {
  Grid g(0.0, 2.0, 57);
  auto f = [](double t, double y) { return std::sin(t) - 0.8 * y; };
  const auto ref = reference_rk4(f, 0.7, g);
  docp::DdeRhs<double> rhs = [](double t, const VectorXd&, const VectorXd& xd) {
    return VectorXd(scal(std::sin(t) - 0.8 * xd(0)));
  };
  auto traj = docp::integrate_dde<double>(rhs, 0.0, scal(0.7), nullptr, 0.0, g);
  for (int i = 0; i <= g.n_steps; ++i) {
    CHECK(std::abs(traj.values()(0, i) - ref[i]) <= 1e-13);
  }
}

TEST_CASE("classical fourth order on a smooth problem") {
  auto err_at = [](int steps) {
    Grid g(0.0, 1.0, steps);
    docp::DdeRhs<double> rhs = [](double, const VectorXd& x, const VectorXd&) {
      return VectorXd(-x);
    };
    auto traj = docp::integrate_dde<double>(rhs, 0.0, scal(1.0), nullptr, 0.0, g);
    double worst = 0.0;
    for (int i = 0; i <= g.n_steps; ++i) {
      worst = std::max(worst, std::abs(traj.values()(0, i) - std::exp(-g.node_time(i))));
    }
    return worst;
  };
  std::vector<double> hs, errs;
  for (int steps : {10, 20, 40, 80, 160}) {
    hs.push_back(1.0 / steps);
    errs.push_back(err_at(steps));
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    const double ratio = errs[i] / errs[i + 1];
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
  CHECK(fitted_slope(hs, errs) >= 3.9);
}

TEST_CASE("composite order at least 3.5 on a grid-aligned delayed problem") {
  std::vector<double> hs, errs;
  for (int steps : {20, 40, 80, 160, 320}) {
    hs.push_back(1.0 / steps);
    errs.push_back(max_node_error_delayed(steps));
  }
  CHECK(fitted_slope(hs, errs) >= 3.5);
}

TEST_CASE("integration is deterministic, bit for bit") {
  Grid g(0.0, 1.0, 64);
  docp::DdeRhs<double> rhs = [](double t, const VectorXd& x, const VectorXd& xd) {
    VectorXd out(2);
    out << std::cos(t) * x(1), -x(0) + 0.25 * xd(0);
    return out;
  };
  VectorXd y0(2);
  y0 << 1.0, -0.5;
  auto hist = [](double) {
    VectorXd v(2);
    v << 1.0, -0.5;
    return v;
  };
  auto a = docp::integrate_dde<double>(rhs, 0.25, y0, hist, -1.0, g);
  auto b = docp::integrate_dde<double>(rhs, 0.25, y0, hist, -1.0, g);
  CHECK((a.values().array() == b.values().array()).all());
  CHECK((a.derivs().array() == b.derivs().array()).all());
}

TEST_CASE("finite-time blowup raises a divergence error with the failure time") {
  Grid g(0.0, 1.0, 100);
  docp::DdeRhs<double> rhs = [](double, const VectorXd& x, const VectorXd&) {
    return VectorXd(scal(x(0) * x(0)));
  };
  try {
    docp::integrate_dde<double>(rhs, 0.0, scal(5.0), nullptr, 0.0, g);
    FAIL("expected DivergenceError");
  } catch (const docp::DivergenceError& e) {
    CHECK(e.time > 0.0);
    CHECK(e.time <= 1.0);
  }
}

TEST_CASE("misaligned positive delay is rejected") {
  Grid g(0.0, 1.0, 10);
  docp::DdeRhs<double> rhs = [](double, const VectorXd& x, const VectorXd&) {
    return VectorXd(-x);
  };
  CHECK_THROWS_AS(docp::integrate_dde<double>(rhs, 0.033, scal(1.0),
                                              [](double) { return scal(1.0); }, -1.0, g),
                  std::invalid_argument);
}

TEST_CASE("delayed lookup without history is an error") {
  Grid g(0.0, 1.0, 10);
  docp::DdeRhs<double> rhs = [](double, const VectorXd&, const VectorXd& xd) { return xd; };
  CHECK_THROWS_AS(docp::integrate_dde<double>(rhs, 0.1, scal(1.0), nullptr, 0.0, g),
                  std::out_of_range);
}
