#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "intervene/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Intervention game engine: verify, design and solve intervention mechanisms"};
  std::string scenario;
  intervene::cli::Overrides ov;
  app.add_option("scenario", scenario, "Scenario file")->required();
  app.add_option("--grid", ov.grid, "Points per axis (overrides the scenario and $INTERVENE_GRID)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24));
  app.add_option("--refine", ov.refine, "Refinement rounds");
  app.add_option("--csv", ov.csv_path, "CSV output path");
  app.add_option("--report", ov.report_path, "Report output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return intervene::cli::kInputError;
  }
  return intervene::cli::run_file(scenario, ov, std::cout, std::cerr);
}
