#include <iostream>

#include <CLI11.hpp>

#include "driver/commands.hpp"

namespace drv = fraccv::driver;

int main(int argc, char** argv) {
  CLI::App app{"Fractional calculus of variations driver.\n"
               "Commands: ops verify envelope minimize relax lsc (run from --config), presets [name]."};
  std::vector<std::string> positional;
  std::string config_path;
  std::string output;
  long long seed = -1;
  std::vector<std::string> overrides;
  app.add_option("command", positional, "command, or 'presets [name]'")->expected(0, 2);
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--output", output, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  app.add_option("--override", overrides, "key=value with a dotted key, repeatable")->take_all();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!positional.empty() && positional[0] == "presets") {
      std::cout << (positional.size() > 1 ? drv::describe_preset(positional[1]) + "\n" : drv::list_presets());
      return 0;
    }
    if (positional.size() > 1) throw drv::ConfigError("unexpected argument '" + positional[1] + "'");
    if (!positional.empty()) overrides.insert(overrides.begin(), "command=\"" + positional[0] + "\"");
    if (!output.empty()) overrides.push_back("output_dir=" + nlohmann::json(output).dump());
    if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
    const auto cfg = config_path.empty() ? drv::parse_config(nlohmann::json::object(), overrides)
                                         : drv::load_config(config_path, overrides);
    const auto outcome = drv::run(cfg, std::cout);
    std::cout << (outcome.exit_code == 0 ? "all checks passed" : "some checks failed") << "; outputs in "
              << cfg.output_dir.string() << '\n';
    return outcome.exit_code;
  } catch (const drv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}
