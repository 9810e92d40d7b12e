#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "fraccv/calculus_id.hpp"

namespace fraccv::driver {

struct RunOutcome {
  int exit_code = 0;  // 0 all checks passed, 1 some check failed
  std::vector<IdentityReport> checks;
  nlohmann::json summary;
};

/// Runs cfg.command, writes summary.json, checks.jsonl and the command's CSV
/// files into cfg.output_dir, and prints one line per check to `log`.
/// Throws ConfigError for problems with the configuration.
RunOutcome run(const RunConfig& cfg, std::ostream& log);

/// Integrand presets with their growth constants, and the test-field families.
std::string list_presets();
/// One preset; throws ConfigError naming the valid options for an unknown name.
std::string describe_preset(const std::string& name);

/// What a named check verifies, for failure messages.
std::string check_description(const std::string& name);

}  // namespace fraccv::driver
