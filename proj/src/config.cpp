#include "spde/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace spde {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used == value.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + value + "'");
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& value) {
  Int x{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("'" + key + "': expected an integer, got '" + value + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("'" + key + "': expected true|false, got '" + value + "'");
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{"alpha", "rho",   "M",          "T",
                                             "N",     "K",     "seed",       "scheme",
                                             "epsilon", "sigma_zero", "f_zero", "threads"};
  return keys;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

void apply_setting(StudyConfig& c, const std::string& key, const std::string& value) {
  if (key == "alpha") {
    c.alpha = to_double(key, value);
  } else if (key == "rho") {
    c.rho = to_double(key, value);
  } else if (key == "M") {
    c.M = to_integer<Eigen::Index>(key, value);
  } else if (key == "T") {
    c.T = to_double(key, value);
  } else if (key == "N" || key == "N_list") {
    c.N_list.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) c.N_list.push_back(to_integer<Eigen::Index>(key, trim(item)));
  } else if (key == "K") {
    c.K = to_integer<Eigen::Index>(key, value);
  } else if (key == "seed" || key == "master_seed") {
    c.master_seed = to_integer<std::uint64_t>(key, value);
  } else if (key == "scheme") {
    try {
      c.scheme = parse_scheme_kind(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "epsilon") {
    c.epsilon = to_double(key, value);
  } else if (key == "sigma_zero") {
    c.sigma_zero = to_bool(key, value);
  } else if (key == "f_zero") {
    c.f_zero = to_bool(key, value);
  } else if (key == "threads") {
    c.threads = to_integer<unsigned>(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

StudyConfig load_config(const std::string& path, StudyConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  for (const auto& [key, value] : parse_key_values(in)) apply_setting(base, key, value);
  return base;
}

}  // namespace spde
