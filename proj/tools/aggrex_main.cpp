#include <string>

#include <CLI11.hpp>

#include "aggrex/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"aggrex: soft state-aggregation solver for Markov chains"};
  app.require_subcommand(1);

  aggrex::CliOptions opts;
  std::string chosen;
  const auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config_path, "key = value config file");
    sub->add_option("--out", opts.out_dir, "output directory (default .)");
    sub->add_option("--seed", opts.seed, "RNG seed (wins over the config key)");
    sub->add_option("--threads", opts.threads,
                    "worker cap (0 = AGGREX_THREADS or default)");
    sub->callback([&, name, sub] {
      chosen = name;
      opts.seed_set = sub->count("--seed") > 0;
    });
  };

  add("estimate", "estimate a chain from a trajectory file");
  add("synth", "generate a low-rank ground-truth chain and a trajectory");
  add("solve", "recover aggregation structure at one regularization level");
  add("path", "warm-restarted solve across a regularization grid");
  add("partition", "cluster states from trip records or chain files");
  add("diagnose", "quality metrics for a saved factor pair");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag/usage problems are input errors
  }
  return aggrex::dispatch_command(chosen, opts);
}
