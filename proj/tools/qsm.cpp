#include <iostream>
#include <utility>

#include "CLI11.hpp"

#include "qsm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Moment dynamics and filtering for quasilinear quantum plants"};
  app.require_subcommand(1);

  qsm::cli::RunOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check the structure constants"},
      {"simulate", "mean and covariance trajectories"},
      {"invariant", "invariant state, QCF samples, spectral density"},
      {"moments", "multi-point moment queries"},
      {"filter", "error covariance and observer gains"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config_path, "scenario JSON")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "seed for the gain comparisons");
    if (std::string(name) == "filter") {
      sub->add_flag("--steady", options.steady, "use the steady-state design");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* chosen = app.get_subcommands().front();
  options.command = chosen->get_name();
  if (chosen->count("--out")) options.out_dir = out_dir;
  if (chosen->count("--seed")) options.seed = seed;
  return qsm::cli::run(options, std::cout, std::cerr);
}
