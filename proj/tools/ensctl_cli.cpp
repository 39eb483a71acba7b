#include <iostream>

#include <CLI11.hpp>

#include "ensctl/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ensemble optimal control experiments at configurable precision"};
  app.set_version_flag("--version", std::string("ensctl ") + ENSCTL_VERSION);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> bits;
  std::optional<std::string> output_dir;
  std::size_t jobs = 1;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Replace the config's seed list with this single seed");
  run->add_option("--precision-bits", bits, "Mantissa bits of the working precision");
  run->add_option("--output-dir", output_dir, "Directory for the result files");
  run->add_option("--jobs", jobs, "Maximum concurrent pair solves and target subsets")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  ensctl::cli::Config cfg;
  try {
    cfg = ensctl::cli::load_config(config_path, {seed, bits, output_dir});
  } catch (const ensctl::Error& e) {
    std::cerr << "ensctl: " << e.what() << "\n";
    return ensctl::cli::exit_code_for(e.kind());
  }
  const auto outcome = ensctl::cli::run_experiment(cfg, {jobs, config_path});
  if (outcome.exit_code != 0) {
    std::cerr << "ensctl: " << outcome.error << "\n";
    std::cerr << "ensctl: partial results in " << cfg.output.directory << "\n";
    return outcome.exit_code;
  }
  std::cout << "wrote";
  for (const auto& f : outcome.files) std::cout << " " << f;
  std::cout << " manifest.json to " << cfg.output.directory << "\n";
  return 0;
}
