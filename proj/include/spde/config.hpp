#pragma once

// Flat `key = value` study configuration files and the CLI entry point.

#include "spde/harness.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spde {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Later keys override earlier ones.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Known keys: alpha rho M T N K seed scheme epsilon sigma_zero f_zero threads.
void apply_setting(StudyConfig& config, const std::string& key, const std::string& value);

StudyConfig load_config(const std::string& path, StudyConfig base = {});

const std::vector<std::string>& known_config_keys();

/// CLI driver. Returns 0 on success, 1 on configuration errors and 2 on a
/// numerical abort.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spde
