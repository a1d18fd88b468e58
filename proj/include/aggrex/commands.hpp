#pragma once

#include <cstdint>
#include <string>

#include "aggrex/io.hpp"

namespace aggrex {

struct CliOptions {
  std::string config_path;      // empty = all defaults
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;        // --seed given (wins over the config key)
  int threads = 0;              // 0 = library default / AGGREX_THREADS
};

// Each command throws InputError/NumericError/ConfigError on failure and
// writes its outputs plus manifest.json under out_dir.
void cmd_estimate(const CliOptions& opts);
void cmd_synth(const CliOptions& opts);
void cmd_solve(const CliOptions& opts);
void cmd_path(const CliOptions& opts);
void cmd_partition(const CliOptions& opts);
void cmd_diagnose(const CliOptions& opts);

// Maps exceptions to exit codes: 0 ok, 2 input, 3 numeric, 4 config schema.
int dispatch_command(const std::string& subcommand, const CliOptions& opts);

void apply_thread_cap(int threads);  // 0 = AGGREX_THREADS or library default

}  // namespace aggrex
