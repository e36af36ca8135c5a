#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace splitdom::cli;
  CLI::App app{"Dominated-splitting analysis of flows and their linear Poincare flows"};
  app.require_subcommand(1);

  auto* systems = app.add_subcommand("systems", "Catalog operations");
  auto* list = systems->add_subcommand("list", "List catalog systems (and optional system files)");
  systems->require_subcommand(1);
  std::vector<std::string> list_paths;
  list->add_option("paths", list_paths, "System description files to list after the catalog");

  RunConfig config;
  auto add_run_flags = [&config](CLI::App* cmd) {
    cmd->add_option("--system", config.system, "Catalog name or path to a system file")->required();
    cmd->add_option("--dt", config.dt, "Integration step for flows")->capture_default_str();
    cmd->add_option("--horizon", config.horizon, "Analysis horizon (time units)")->capture_default_str();
    cmd->add_option("--aperture", config.aperture, "Cone aperture")->capture_default_str();
    cmd->add_option("--lambda-min", config.lambda_min, "Smallest rate accepted as domination")->capture_default_str();
    cmd->add_option("--r2-min", config.r2_min, "Smallest r^2 of the rate fit")->capture_default_str();
    cmd->add_option("--gap-min", config.gap_min, "Smallest singular-value gap per window")->capture_default_str();
    cmd->add_option("--out", config.output_dir, "Output directory (SPLITDOM_OUT overrides)")->capture_default_str();
    cmd->add_option("--format", config.format, "Report format: json, csv or plotdata")
        ->check(CLI::IsMember({"json", "csv", "plotdata"}))
        ->capture_default_str();
  };
  auto* analyze = app.add_subcommand("analyze", "Compare LPF domination with flow partial domination");
  add_run_flags(analyze);
  auto* cones = app.add_subcommand("cones", "Search for a strongly dominated cone field");
  add_run_flags(cones);
  cones->add_option("--t-max", config.t_max, "Largest t0 tried, in samples")->capture_default_str();

  auto* plot = app.add_subcommand("plotdata", "Convert a stored report to plot data");
  std::string report;
  std::optional<std::string> plot_out;
  plot->add_option("report", report, "Report JSON file")->required();
  plot->add_option("--out", plot_out, "Directory for the plot files (default: next to the report)");

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (list->parsed()) return cmd_systems_list(list_paths, std::cout, std::cerr);
  if (analyze->parsed()) return cmd_analyze(config, std::cout, std::cerr);
  if (cones->parsed()) return cmd_cones(config, std::cout, std::cerr);
  if (plot->parsed())
    return cmd_plotdata(report, plot_out ? std::optional<std::filesystem::path>(*plot_out) : std::nullopt, std::cout,
                        std::cerr);
  if (selftest->parsed()) return splitdom::acceptance::run_all(std::cout) ? 0 : 1;
  return 1;
}
