// drlab command-line front end; links only the C API of the shared library.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "drlab.h"

int main(int argc, char** argv) {
  CLI::App app{"Duchon-Robert energy-flux laboratory"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  bool deterministic = false;
  int workers = 0;

  CLI::App* run = app.add_subcommand("run", "run a scenario file and write reports");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_flag("--deterministic", deterministic, "bit-stable reductions (single worker)");
  run->add_option("--workers", workers, "worker pool size (0 = hardware)");
  run->add_option("--out", out_dir, "output directory (overrides scenario and DRLAB_OUT)");

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a scenario file");
  validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI::App* catalog = app.add_subcommand("catalog", "list fields, kernels and the scenario schema");

  CLI11_PARSE(app, argc, argv);

  if (catalog->parsed()) {
    std::fputs(drlab_catalog_text(), stdout);
    return 0;
  }

  if (validate->parsed()) {
    drlab_status s = drlab_scenario_validate(scenario_path.c_str());
    if (s != DRLAB_OK) {
      std::fprintf(stderr, "invalid scenario: %s\n", drlab_last_error());
      return 1;
    }
    std::printf("scenario ok\n");
    return 0;
  }

  // run
  if (out_dir.empty()) {
    if (const char* env = std::getenv("DRLAB_OUT")) out_dir = env;
  }
  drlab_run_options opts{};
  opts.deterministic = deterministic ? 1 : 0;
  opts.workers = workers;
  opts.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
  int exit_code = 1;
  drlab_status s = drlab_scenario_run(scenario_path.c_str(), &opts, &exit_code);
  if (s != DRLAB_OK) {
    std::fprintf(stderr, "error: %s\n", drlab_last_error());
    return 1;
  }
  if (exit_code == 2) {
    std::fprintf(stderr, "refused: %s\n", drlab_last_error());
  } else if (exit_code != 0) {
    std::fprintf(stderr, "error: %s\n", drlab_last_error());
  }
  return exit_code;
}
