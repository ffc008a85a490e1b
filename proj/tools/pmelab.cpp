#include "pmelab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"pmelab: finite-m porous medium runs with incompressible-limit diagnostics"};
  app.set_version_flag("--version", pmelab::kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  pmelab::RunOptions opts;
  double m_value = 0.0;
  std::string outdir, sweep_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config file")->required();
    cmd->add_option("--outdir", outdir, "output directory (overrides the config key)");
  };

  CLI::App* check = app.add_subcommand("check", "verify the structural assumptions");
  add_common(check);

  CLI::App* simulate = app.add_subcommand("simulate", "run one stiffness exponent");
  add_common(simulate);
  simulate->add_option("--m", m_value, "stiffness exponent (default: first of m_list)");
  simulate->add_flag("--force", opts.force, "run despite failed assumptions");

  CLI::App* sweep = app.add_subcommand("sweep", "run every m in m_list and aggregate");
  add_common(sweep);
  sweep->add_flag("--force", opts.force, "run despite failed assumptions");
  sweep->add_option("--jobs", opts.jobs, "concurrent member runs (default: one per m)");

  CLI::App* oracle = app.add_subcommand("oracle", "limit-problem reference solution");
  add_common(oracle);
  oracle->add_option("--sweep-dir", sweep_dir,
                     "sweep output directory to compare the measured front against");

  CLI11_PARSE(app, argc, argv);

  if (!outdir.empty()) opts.outdir = outdir;
  if (!sweep_dir.empty()) opts.sweep_dir = sweep_dir;
  if (simulate->parsed() && simulate->count("--m") > 0) opts.m = m_value;

  if (check->parsed()) return pmelab::run_check(config_path, opts, std::cout);
  if (simulate->parsed()) return pmelab::run_simulate(config_path, opts, std::cout);
  if (sweep->parsed()) return pmelab::run_sweep(config_path, opts, std::cout);
  return pmelab::run_oracle(config_path, opts, std::cout);
}
