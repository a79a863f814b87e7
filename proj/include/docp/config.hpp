#pragma once

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "docp/problem.hpp"
#include "docp/shooting.hpp"

namespace docp {

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_no, const std::string& what)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
};

/// One solver run, as described by a key = value config file. Problem
/// parameters follow the rendezvous preset family; the paper-style instance
/// (v0 = 100, c0 = 1, T = 19) is the default.
struct RunConfig {
  std::string problem_name = "rendezvous";
  double v0 = 100.0;
  double c0 = 1.0;
  Eigen::Vector4d init{0.0, 0.0, 0.7853981633974483, 5e-4};       // theta0 = pi/4
  Eigen::Vector4d target{1500.0, 1000.0, 0.15707963267948966, 0.0};  // theta = pi/20
  double horizon = 19.0;
  double max_delay = 19.0;

  double tau_target = 0.0;
  std::vector<double> sweep;

  double dtau = 0.0;      ///< 0: auto (tau_target / 10)
  double dtau_min = 0.0;  ///< 0: auto (tau_target / 1000)
  double base_h = 0.0;    ///< 0: auto (horizon / 2000)
  int refine_passes = 1;
  double refine_tol = 1e-8;

  ShootingOptions shooting = []() {
    ShootingOptions s;
    // The rendezvous family mixes meters and radians; its adjoints sit at
    // 1e-8..1e-4, so the finite-difference probe must stay well inside the
    // linear response range.
    s.fd_step = 1e-12;
    return s;
  }();

  std::string output_dir = "out";

  DelayedOCP build_problem() const {
    return rendezvous_problem(v0, c0, init, target, horizon, max_delay);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(int line, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(line, key + ": expected a number, got '" + value + "'");
  }
  if (pos != value.size()) throw ConfigError(line, key + ": trailing characters in '" + value + "'");
  if (!std::isfinite(d)) throw ConfigError(line, key + " must be finite");
  return d;
}

inline int parse_int(int line, const std::string& key, const std::string& value) {
  const double d = parse_double(line, key, value);
  if (d != std::floor(d)) throw ConfigError(line, key + ": expected an integer");
  return static_cast<int>(d);
}

inline std::vector<double> parse_list(int line, const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(line, key, trim(item)));
  if (out.empty()) throw ConfigError(line, key + ": expected a comma-separated list");
  return out;
}

inline Eigen::Vector4d parse_vec4(int line, const std::string& key, const std::string& value) {
  const auto list = parse_list(line, key, value);
  if (list.size() != 4) throw ConfigError(line, key + ": expected 4 comma-separated values");
  return Eigen::Vector4d(list[0], list[1], list[2], list[3]);
}

}  // namespace detail

/// Parses a line-based `key = value` config. `#` starts a comment line;
/// dotted keys address nested options (problem.v0, shooting.fd_step).
/// Unknown keys, malformed values and constraint violations throw ConfigError
/// with the offending line number.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int tau_target_line = 0;
  int sweep_line = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, key + ": empty value");

    if (key == "problem") {
      cfg.problem_name = value;
      if (value != "rendezvous")
        throw ConfigError(line_no, "problem: unknown preset '" + value + "'");
    } else if (key == "problem.v0") {
      cfg.v0 = detail::parse_double(line_no, key, value);
      if (!(cfg.v0 > 0.0)) throw ConfigError(line_no, "problem.v0 must be positive");
    } else if (key == "problem.c0") {
      cfg.c0 = detail::parse_double(line_no, key, value);
      if (!(cfg.c0 > 0.0)) throw ConfigError(line_no, "problem.c0 must be positive");
    } else if (key == "problem.init") {
      cfg.init = detail::parse_vec4(line_no, key, value);
    } else if (key == "problem.target") {
      cfg.target = detail::parse_vec4(line_no, key, value);
    } else if (key == "problem.T") {
      cfg.horizon = detail::parse_double(line_no, key, value);
      if (!(cfg.horizon > 0.0)) throw ConfigError(line_no, "problem.T must be positive");
    } else if (key == "problem.M") {
      cfg.max_delay = detail::parse_double(line_no, key, value);
      if (!(cfg.max_delay > 0.0)) throw ConfigError(line_no, "problem.M must be positive");
    } else if (key == "tau_target") {
      cfg.tau_target = detail::parse_double(line_no, key, value);
      tau_target_line = line_no;
      if (cfg.tau_target < 0.0) throw ConfigError(line_no, "tau_target must be non-negative");
    } else if (key == "sweep") {
      cfg.sweep = detail::parse_list(line_no, key, value);
      sweep_line = line_no;
    } else if (key == "dtau") {
      cfg.dtau = detail::parse_double(line_no, key, value);
      if (!(cfg.dtau > 0.0)) throw ConfigError(line_no, "dtau must be positive");
    } else if (key == "dtau_min") {
      cfg.dtau_min = detail::parse_double(line_no, key, value);
      if (!(cfg.dtau_min > 0.0)) throw ConfigError(line_no, "dtau_min must be positive");
    } else if (key == "base_h") {
      cfg.base_h = detail::parse_double(line_no, key, value);
      if (!(cfg.base_h > 0.0)) throw ConfigError(line_no, "base_h must be positive");
    } else if (key == "refine_passes") {
      cfg.refine_passes = detail::parse_int(line_no, key, value);
      if (cfg.refine_passes < 0) throw ConfigError(line_no, "refine_passes must be >= 0");
    } else if (key == "refine_tol") {
      cfg.refine_tol = detail::parse_double(line_no, key, value);
      if (!(cfg.refine_tol > 0.0)) throw ConfigError(line_no, "refine_tol must be positive");
    } else if (key == "shooting.residual_tol_abs") {
      cfg.shooting.residual_tol_abs = detail::parse_double(line_no, key, value);
      if (!(cfg.shooting.residual_tol_abs > 0.0))
        throw ConfigError(line_no, "shooting.residual_tol_abs must be positive");
    } else if (key == "shooting.residual_tol_rel") {
      cfg.shooting.residual_tol_rel = detail::parse_double(line_no, key, value);
      if (!(cfg.shooting.residual_tol_rel > 0.0))
        throw ConfigError(line_no, "shooting.residual_tol_rel must be positive");
    } else if (key == "shooting.max_iterations") {
      cfg.shooting.max_iterations = detail::parse_int(line_no, key, value);
      if (cfg.shooting.max_iterations < 1)
        throw ConfigError(line_no, "shooting.max_iterations must be >= 1");
    } else if (key == "shooting.fd_step") {
      cfg.shooting.fd_step = detail::parse_double(line_no, key, value);
      if (!(cfg.shooting.fd_step > 0.0))
        throw ConfigError(line_no, "shooting.fd_step must be positive");
    } else if (key == "shooting.max_backtracks") {
      cfg.shooting.max_backtracks = detail::parse_int(line_no, key, value);
      if (cfg.shooting.max_backtracks < 1)
        throw ConfigError(line_no, "shooting.max_backtracks must be >= 1");
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else {
      throw ConfigError(line_no, "unknown key '" + key + "'");
    }
  }

  if (!cfg.init.allFinite()) throw ConfigError(0, "problem.init must be finite");
  if (!cfg.target.allFinite()) throw ConfigError(0, "problem.target must be finite");
  if (cfg.tau_target > cfg.max_delay)
    throw ConfigError(tau_target_line, "tau_target must not exceed problem.M");
  if (!cfg.sweep.empty()) {
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
      if (cfg.sweep[i] < 0.0) throw ConfigError(sweep_line, "sweep values must be non-negative");
      if (cfg.sweep[i] > cfg.max_delay)
        throw ConfigError(sweep_line, "sweep values must not exceed problem.M");
      if (i > 0 && !(cfg.sweep[i] > cfg.sweep[i - 1]))
        throw ConfigError(sweep_line, "sweep must be strictly ascending");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace docp
