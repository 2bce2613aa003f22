#include <iostream>

#include <CLI11.hpp>

#include "dses/cli.hpp"

namespace {

void add_scenario_flags(CLI::App* cmd, dses::cli::RunOptions& opt) {
  cmd->add_option("--config", opt.config, "Scenario JSON file");
  cmd->add_option("--preset", opt.preset, "Built-in scenario preset name");
  cmd->add_option("--seed", opt.seed, "Master seed (trial k uses seed + k)");
  cmd->add_option("--trials", opt.trials, "Number of independent trials");
  cmd->add_option("--set", opt.sets, "Override a config key: dotted.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed stochastic extremum-seeking simulator"};
  app.require_subcommand(1);

  dses::cli::RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV + summary JSON");
  add_scenario_flags(run, run_opt);
  run->add_option("--out", run_opt.out, "Output directory");

  std::filesystem::path report_dir, report_out;
  auto* report = app.add_subcommand("report", "Rate report and plot data from a run directory");
  report->add_option("run_dir", report_dir, "Directory written by `run`")->required();
  report->add_option("--out", report_out, "Output directory (default: the run directory)");

  app.add_subcommand("presets", "List built-in presets");

  dses::cli::RunOptions val_opt;
  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  add_scenario_flags(validate, val_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return dses::cli::cmd_run(run_opt, std::cout);
    if (report->parsed()) return dses::cli::cmd_report(report_dir, report_out, std::cout);
    if (validate->parsed()) return dses::cli::cmd_validate(val_opt, std::cout);
    return dses::cli::cmd_presets(std::cout);
  } catch (const dses::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dses::cli::kUsage;
  } catch (const dses::AssumptionViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dses::cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dses::cli::kRuntime;
  }
}
