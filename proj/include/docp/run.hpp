#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "docp/config.hpp"
#include "docp/continuation.hpp"
#include "docp/endpoint.hpp"

namespace docp {

/// 17 significant digits: round-trips binary64 exactly.
inline std::string format_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest decimal that round-trips; used for values embedded in file names.
inline std::string format_shortest(double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline bool write_trajectory_csv(const std::filesystem::path& path, const ExtremalLift& lift,
                                 int n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",p" << i;
  out << ",u\n";
  const Grid& g = lift.state.grid();
  for (int i = 0; i <= g.n_steps; ++i) {
    out << format_g17(g.node_time(i));
    for (int j = 0; j < n; ++j) out << ',' << format_g17(lift.state.values()(j, i));
    for (int j = 0; j < n; ++j) out << ',' << format_g17(lift.adjoint.values()(j, i));
    out << ',' << format_g17(lift.control.values()(0, i)) << '\n';
  }
  return static_cast<bool>(out);
}

inline bool write_summary_csv(const std::filesystem::path& path,
                              const std::vector<ContinuationStep>& steps, int n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << "tau,cost,converged,newton_iters";
  for (int i = 1; i <= n; ++i) out << ",p0_" << i;
  out << '\n';
  for (const auto& step : steps) {
    out << format_g17(step.tau) << ',' << format_g17(step.result.lift.cost) << ','
        << (step.result.converged ? 1 : 0) << ',' << step.result.iterations;
    for (int i = 0; i < n; ++i) out << ',' << format_g17(step.result.p0[i]);
    out << '\n';
  }
  return static_cast<bool>(out);
}

struct GramianRow {
  double tau;
  GramianResult gram;
};

inline bool write_gramian_csv(const std::filesystem::path& path,
                              const std::vector<GramianRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << "tau,lambda_min,trace,surjective\n";
  for (const auto& row : rows) {
    out << format_g17(row.tau) << ',' << format_g17(row.gram.lambda_min) << ','
        << format_g17(row.gram.gramian.trace()) << ',' << (row.gram.surjective ? 1 : 0) << '\n';
  }
  return static_cast<bool>(out);
}

inline ContinuationOptions continuation_options(const RunConfig& cfg, bool verbose,
                                                std::ostream& log) {
  ContinuationOptions opts;
  opts.dtau_init = cfg.dtau;
  opts.dtau_min = cfg.dtau_min;
  opts.base_h = cfg.base_h;
  opts.refine_passes = cfg.refine_passes;
  opts.refine_tol = cfg.refine_tol;
  opts.shooting = cfg.shooting;
  if (verbose) opts.log = [&log](const std::string& msg) { log << msg << '\n'; };
  return opts;
}

/// Runs the continuation a config asks for: plain non-delayed shooting when
/// the target delay is zero, the homotopy otherwise.
inline std::pair<std::vector<ContinuationStep>, bool> solve_for_config(
    const DelayedOCP& ocp, const RunConfig& cfg, double tau_target,
    const std::vector<double>& checkpoints, const ContinuationOptions& opts) {
  if (tau_target == 0.0) {
    ShootingResult res = solve_nondelayed(ocp, Vector::Zero(ocp.n), opts);
    std::vector<ContinuationStep> steps;
    const bool ok = res.converged;
    if (ok) steps.push_back({0.0, std::move(res)});
    return {std::move(steps), ok};
  }
  ContinuationTrace trace = continuation_solve(ocp, tau_target, Vector::Zero(ocp.n), opts,
                                               checkpoints);
  return {std::move(trace.steps), trace.succeeded};
}

}  // namespace detail

/// Runs the continuation to cfg.tau_target and writes summary.csv plus the
/// trajectory of the last converged step. Exit status: 0 on success, 1 on a
/// failed continuation (partial files still written), 2 on config/IO errors.
inline int run_solve(const RunConfig& cfg, bool verbose = false, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  try {
    DelayedOCP ocp = cfg.build_problem();
    const ValidationReport report = validate(ocp);
    if (!report.valid()) {
      for (const auto& v : report.violations) log << "invalid problem: " << v << '\n';
      return 2;
    }
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const ContinuationOptions opts = detail::continuation_options(cfg, verbose, log);
    auto [steps, succeeded] = detail::solve_for_config(ocp, cfg, cfg.tau_target, {}, opts);

    if (!detail::write_summary_csv(fs::path(cfg.output_dir) / "summary.csv", steps, ocp.n)) {
      log << "cannot write to output_dir '" << cfg.output_dir << "'\n";
      return 2;
    }
    if (!steps.empty()) {
      const auto& last = steps.back();
      const auto name = "trajectory_tau" + format_shortest(last.tau) + ".csv";
      if (!detail::write_trajectory_csv(fs::path(cfg.output_dir) / name, last.result.lift,
                                        ocp.n)) {
        log << "cannot write to output_dir '" << cfg.output_dir << "'\n";
        return 2;
      }
    }
    return succeeded ? 0 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

/// Single continuation pass to the largest swept delay, emitting a trajectory
/// file at every swept value (each is visited exactly) and summary rows for
/// all steps taken.
inline int run_sweep(const RunConfig& cfg, bool verbose = false, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  try {
    if (cfg.sweep.empty()) {
      log << "error: sweep requires a non-empty ascending 'sweep' list\n";
      return 2;
    }
    DelayedOCP ocp = cfg.build_problem();
    const ValidationReport report = validate(ocp);
    if (!report.valid()) {
      for (const auto& v : report.violations) log << "invalid problem: " << v << '\n';
      return 2;
    }
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const ContinuationOptions opts = detail::continuation_options(cfg, verbose, log);
    const double target = cfg.sweep.back();
    std::vector<double> checkpoints;
    for (double tau : cfg.sweep)
      if (tau > 0.0) checkpoints.push_back(tau);
    auto [steps, succeeded] = detail::solve_for_config(ocp, cfg, target, checkpoints, opts);

    if (!detail::write_summary_csv(fs::path(cfg.output_dir) / "summary.csv", steps, ocp.n)) {
      log << "cannot write to output_dir '" << cfg.output_dir << "'\n";
      return 2;
    }
    for (double tau : cfg.sweep) {
      for (const auto& step : steps) {
        if (std::abs(step.tau - tau) <= 1e-9 * std::max(1.0, tau)) {
          const auto name = "trajectory_tau" + format_shortest(step.tau) + ".csv";
          if (!detail::write_trajectory_csv(fs::path(cfg.output_dir) / name, step.result.lift,
                                            ocp.n)) {
            log << "cannot write to output_dir '" << cfg.output_dir << "'\n";
            return 2;
          }
          break;
        }
      }
    }
    return succeeded ? 0 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

/// Solves at tau = 0 (or at each swept delay) and reports the controllability
/// Gramian of each converged lift in gramian.csv.
inline int run_gramian_check(const RunConfig& cfg, bool verbose = false,
                             std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  try {
    DelayedOCP ocp = cfg.build_problem();
    const ValidationReport report = validate(ocp);
    if (!report.valid()) {
      for (const auto& v : report.violations) log << "invalid problem: " << v << '\n';
      return 2;
    }
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const ContinuationOptions opts = detail::continuation_options(cfg, verbose, log);

    std::vector<double> taus = cfg.sweep.empty() ? std::vector<double>{0.0} : cfg.sweep;
    const double target = taus.back();
    std::vector<double> checkpoints;
    for (double tau : taus)
      if (tau > 0.0) checkpoints.push_back(tau);
    auto [steps, succeeded] = detail::solve_for_config(ocp, cfg, target, checkpoints, opts);

    std::vector<detail::GramianRow> rows;
    for (double tau : taus) {
      for (const auto& step : steps) {
        if (std::abs(step.tau - tau) <= 1e-9 * std::max(1.0, tau)) {
          const Grid& grid = step.result.lift.state.grid();
          rows.push_back({step.tau,
                          controllability_gramian(ocp, step.tau, step.result.lift, grid)});
          break;
        }
      }
    }
    if (!detail::write_gramian_csv(fs::path(cfg.output_dir) / "gramian.csv", rows)) {
      log << "cannot write to output_dir '" << cfg.output_dir << "'\n";
      return 2;
    }
    return succeeded ? 0 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace docp
