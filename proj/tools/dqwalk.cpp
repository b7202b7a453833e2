// dqwalk: command-line driver for the decoherent 2D walk experiments.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dqw/cli.hpp"
#include "dqw/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decoherent two-dimensional quantum walk experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;

  for (const char* name : {"simulate", "spectrum", "limit", "verify", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", threads, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dqw::cli::kExitConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  dqw::cli::RunConfig cfg;
  try {
    cfg = dqw::cli::load_config(config_path);
  } catch (const dqw::Error& e) {
    std::cerr << "dqwalk: " << e.what() << '\n';
    return dqw::cli::kExitConfigError;
  }
  if (seed) cfg.seed = *seed;
  if (threads > 0) dqw::set_default_threads(static_cast<unsigned>(threads));

  std::string message;
  const int rc = dqw::cli::run_command(command, cfg, {out_dir}, &message);
  if (rc != 0) std::cerr << "dqwalk " << command << ": " << message << " (exit " << rc << ")\n";
  return rc;
}
