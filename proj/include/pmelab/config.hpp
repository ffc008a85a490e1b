#pragma once

#include "pmelab/problem.hpp"

#include <stdexcept>
#include <string>

namespace pmelab {

/// Malformed configuration; carries the offending line where known.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment as described by a flat `key = value` file. `#` starts a
/// comment; unknown keys are an error.
struct Config {
  ProblemSpec spec;
  std::string outdir = "pmelab_out";
  bool force = false;
  std::string source_text;  // original file contents, copied into run dirs
  std::string name;         // path or label, for error messages
};

Config parse_config(const std::string& text, const std::string& name);
Config load_config(const std::string& path);

}  // namespace pmelab
