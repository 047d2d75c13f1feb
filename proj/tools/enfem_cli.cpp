// Command-line front end: enfem <verb> [--config PATH] [--prior PATH]
// [--out DIR] [--seed U64] [--threads INT].

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "enfem/commands.hpp"
#include "enfem/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite elements enriched by parametric network priors"};
  app.require_subcommand(1, 1);
  std::string config_path, prior_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--prior", prior_path, "trained prior descriptor (prior.txt)");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "global seed (overrides output.seed)");
  app.add_option("--threads", threads, "worker threads (runs are single-threaded)")->check(CLI::PositiveNumber);
  for (const char* verb : {"train", "solve", "converge", "gains", "msweep", "degree-study"}) app.add_subcommand(verb)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  enfem::RunConfig config;
  try {
    config = config_path.empty() ? enfem::default_config("lap1d") : enfem::load_config(config_path);
  } catch (const enfem::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
  if (!out_dir.empty()) config.directory = out_dir;
  if (seed) config.set_seed(*seed);
  if (threads > 1) std::cerr << "note: running single-threaded for bit-exact output\n";
  return enfem::run_command(app.get_subcommands().front()->get_name(), config, prior_path, std::cerr);
}
