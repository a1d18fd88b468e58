#pragma once

#include <stdexcept>
#include <string>

namespace aggrex {

// Error taxonomy mirrors the CLI exit codes: input (2), numeric (3), config (4).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace aggrex
