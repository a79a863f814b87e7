#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "docp/docp.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir_override;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "path to a key = value config file")->required();
  cmd->add_option("--output-dir", args.output_dir_override, "override output_dir from the config");
  cmd->add_flag("--verbose", args.verbose, "step logging to standard error");
}

int load_and_run(const CommonArgs& args, int (*runner)(const docp::RunConfig&, bool,
                                                       std::ostream&)) {
  try {
    docp::RunConfig cfg = docp::load_config(args.config_path);
    if (!args.output_dir_override.empty()) cfg.output_dir = args.output_dir_override;
    return runner(cfg, args.verbose, std::cerr);
  } catch (const docp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docp: fixed-delay optimal control solver (indirect shooting with delay "
               "continuation)"};
  app.require_subcommand(1);

  CommonArgs solve_args, sweep_args, gramian_args;
  CLI::App* solve = app.add_subcommand("solve", "run the continuation to tau_target");
  add_common(solve, solve_args);
  CLI::App* sweep = app.add_subcommand("sweep", "one continuation pass visiting every swept tau");
  add_common(sweep, sweep_args);
  CLI::App* gramian = app.add_subcommand("gramian", "controllability Gramian report");
  add_common(gramian, gramian_args);

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return load_and_run(solve_args, docp::run_solve);
  if (sweep->parsed()) return load_and_run(sweep_args, docp::run_sweep);
  return load_and_run(gramian_args, docp::run_gramian_check);
}
