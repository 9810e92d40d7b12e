#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraccv/fracops.hpp"
#include "fraccv/spaces.hpp"

namespace fraccv::driver {

/// Invalid or incomplete configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> command_names();

/// Parsed run configuration. `raw` holds the full key tree after defaults and
/// overrides have been applied; command-specific sections are read from it.
struct RunConfig {
  std::string command;
  GridSpec grid;
  FractionalParams params;
  OperatorBackend backend;
  std::string integrand;
  std::filesystem::path output_dir;
  unsigned long long seed = 0;
  nlohmann::json raw;

  /// raw[section][key], with ConfigError naming "section.key" on a type mismatch.
  template <class T>
  T get(const std::string& section, const std::string& key) const;
  /// Tolerance override from the "tolerances" section, else `fallback`.
  [[nodiscard]] double tolerance(const std::string& name, double fallback) const;
};

/// Key tree with every default filled in (alpha has none).
nlohmann::json default_tree();

/// Applies "a.b.c=value"; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

/// Merges `user` over the defaults, applies overrides and validates.
/// Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// The test field described by a {"family", ...} object (bump or gaussian).
SampledField make_field(const nlohmann::json& spec, const GridSpec& grid, const std::string& where);

/// Omega is the ball of radius complementary.omega_radius about the centre of
/// the domain; the datum is a field family (or "zero").
ComplementarySpec make_complementary(const RunConfig& cfg);

template <class T>
T RunConfig::get(const std::string& section, const std::string& key) const {
  const auto where = section + "." + key;
  if (!raw.contains(section) || !raw.at(section).contains(key)) throw ConfigError("missing key '" + where + "'");
  try {
    return raw.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + where + "' has the wrong type: " + raw.at(section).at(key).dump());
  }
}

}  // namespace fraccv::driver
