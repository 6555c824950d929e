// Batch front door: load a run configuration, dispatch one command, emit the
// artifact. Exit codes: 0 success, 2 validation failure, 3 refuted verdict.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ohg/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"opportunity-hunting game toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  std::uint64_t replications = 0;
  std::uint64_t traces = 0;
  int threads = 1;
  bool seed_set = false, reps_set = false, format_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--replications", replications, "replication count override")
        ->each([&](const std::string&) { reps_set = true; });
    cmd->add_option("--out", out_path, "write the primary artifact to this file");
    cmd->add_option("--format", format, "csv|json (simulate output)")
        ->each([&](const std::string&) { format_set = true; });
    cmd->add_option("--threads", threads, "worker threads for batches");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo batch statistics");
  simulate->add_option("--traces", traces, "also serialize the first N plays");
  add_common(simulate);
  add_common(app.add_subcommand("evaluate", "analytic payoff report"));
  add_common(app.add_subcommand("verify", "Markov-deviation equilibrium test"));
  add_common(app.add_subcommand("respond", "best response and extraction"));
  add_common(app.add_subcommand("demo-zeno", "transfinite schedule fixture"));

  CLI11_PARSE(app, argc, argv);

  ohg::RunConfig cfg;
  try {
    cfg = config_path.empty() ? ohg::default_config() : ohg::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ohg::kExitValidation;
  }

  ohg::RunOptions opts;
  if (seed_set) opts.seed = seed;
  if (reps_set) opts.replications = replications;
  if (format_set) opts.format = format;
  opts.out_path = out_path;
  opts.trace_count = traces;
  opts.threads = threads;

  const std::string command = app.get_subcommands().front()->get_name();
  return ohg::run_command(command, std::move(cfg), opts, std::cout, std::cerr);
}
