#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dtnlab/io.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtn-lab: partial-boundary D-to-N experiment runner"};
  app.set_version_flag("--version", dtnlab::kToolVersion);
  app.require_subcommand(1);

  dtnlab::RunArgs run;
  std::string run_exps;
  uint64_t seed = 0;
  double grid_h = 0.0;
  auto* cmd_run = app.add_subcommand("run", "run experiments on a scenario");
  cmd_run->add_option("scenario", run.scenario_path, "scenario JSON file")
      ->required();
  cmd_run->add_option("--exp", run_exps,
                      "comma-separated experiment names (default: all)");
  cmd_run->add_option("--out", run.out_dir, "output directory")->required();
  cmd_run->add_flag("--force", run.force,
                    "overwrite a non-empty output directory");
  auto* seed_opt =
      cmd_run->add_option("--seed", seed, "override the scenario seed");
  auto* grid_opt =
      cmd_run->add_option("--grid", grid_h, "override the grid spacing h");

  dtnlab::ConvergenceArgs conv;
  std::string ladder_str;
  auto* cmd_conv =
      app.add_subcommand("convergence", "grid-refinement study of one experiment");
  cmd_conv->add_option("scenario", conv.scenario_path, "scenario JSON file")
      ->required();
  cmd_conv->add_option("--ladder", ladder_str,
                       "comma-separated h values, coarse to fine")
      ->required();
  cmd_conv->add_option("--exp", conv.experiment, "experiment name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  if (cmd_run->parsed()) {
    run.experiments = split_list(run_exps);
    if (*seed_opt) run.seed = seed;
    if (*grid_opt) run.grid_h = grid_h;
    return dtnlab::cmd_run(run, std::cout);
  }

  for (const auto& tok : split_list(ladder_str)) {
    try {
      size_t pos = 0;
      conv.ladder.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      std::cout << "parse error: bad ladder entry '" << tok << "'\n";
      return 2;
    }
  }
  return dtnlab::cmd_convergence(conv, std::cout);
}
