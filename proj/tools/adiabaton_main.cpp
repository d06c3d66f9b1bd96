// Command-line front end: simulate | oracle | diff.

#include <string>

#include <CLI11.hpp>

#include "adiabaton/adiabaton.hpp"

int main(int argc, char** argv) {
  CLI::App app{"adiabaton: slow-light pulse-pair propagation in multilevel media"};
  app.require_subcommand(1);

  std::string config_path, out_dir, which;
  std::string run_dir, oracle_dir;
  double tol = 0.05;
  bool emit_plots = false;

  CLI::App* simulate = app.add_subcommand("simulate", "propagate a configured run");
  simulate->add_option("--config", config_path, "JSON run configuration")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_flag("--emit-plots", emit_plots, "write SVG envelope plots");

  CLI::App* oracle = app.add_subcommand("oracle", "evaluate a closed-form oracle");
  oracle->add_option("--config", config_path, "JSON run configuration")->required();
  oracle->add_option("--which", which, "lambda_analytic | dt_modes | dt_predict | m_velocity")
      ->required();
  oracle->add_option("--out", out_dir, "output directory")->required();

  CLI::App* diff = app.add_subcommand("diff", "compare two output directories");
  diff->add_option("run_dir", run_dir, "solver output directory")->required();
  diff->add_option("oracle_dir", oracle_dir, "reference output directory")->required();
  diff->add_option("--tol", tol, "relative L2 tolerance");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return adiabaton::cmd_simulate(config_path, out_dir, emit_plots);
  if (oracle->parsed()) return adiabaton::cmd_oracle(config_path, which, out_dir);
  return adiabaton::cmd_diff(run_dir, oracle_dir, tol);
}
