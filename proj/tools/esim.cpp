#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "esim/experiment.hpp"
#include "esim/state.hpp"

namespace {

void add_common_flags(CLI::App* cmd, esim::CommonOverrides& overrides) {
  cmd->add_option("--seed", overrides.seed, "Base seed; run r uses seed + r");
  cmd->add_option("--runs", overrides.runs, "Seeded runs per batch");
  cmd->add_option("--out", overrides.out,
                  std::string("Output directory (default $") + esim::kOutDirEnvVar +
                      " or ./esim-out)");
  cmd->add_option("--swaps", overrides.swaps, "Pair-wise exchanges per migration event");
  cmd->add_option("--generations", overrides.generations, "Generations per run");
  cmd->add_option("--migration-interval", overrides.migration_interval,
                  "Generations between migration events");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Island-model evolution simulator and experiment runner"};
  app.require_subcommand(1);

  esim::CommonOverrides overrides;

  std::string config_path;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute the runs described by a config file");
  run_cmd->add_option("config", config_path, "key=value config file")->required();
  add_common_flags(run_cmd, overrides);

  CLI::App* table2_cmd =
      app.add_subcommand("table2", "Sensitivity summary over the benchmark suite");
  add_common_flags(table2_cmd, overrides);

  std::string which_figure;
  CLI::App* figure_cmd =
      app.add_subcommand("figure", "Activity experiment with CSV output and SVG plot");
  figure_cmd->add_option("which", which_figure, "fig4 (all problems) or fig6 (swap-size sweep)")
      ->required();
  add_common_flags(figure_cmd, overrides);

  std::string csv_path;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render an activity CSV as a stacked SVG plot");
  plot_cmd->add_option("csv", csv_path, "activity CSV produced by run/figure")->required();
  plot_cmd->add_option("--out", overrides.out, "Output directory for the SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (run_cmd->parsed())
      esim::cmd_run(config_path, overrides);
    else if (table2_cmd->parsed())
      esim::cmd_table2(overrides);
    else if (figure_cmd->parsed())
      esim::cmd_figure(which_figure, overrides);
    else if (plot_cmd->parsed())
      esim::cmd_plot(csv_path, overrides);
    return 0;
  } catch (const esim::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
