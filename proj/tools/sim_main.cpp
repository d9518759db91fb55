#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ecoplatoon/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"eco-platooning corridor simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string mode_str;

  auto* run_cmd = app.add_subcommand("run", "run one scenario and write outputs");
  run_cmd->add_option("--config", config_path, "scenario config JSON")->required();
  run_cmd->add_option("--mode", mode_str, "advisory|baseline (overrides the config)");
  run_cmd->add_option("--out", out_dir, "output directory");

  auto* compare_cmd =
      app.add_subcommand("compare", "run advisory and baseline, report fuel savings");
  compare_cmd->add_option("--config", config_path, "scenario config JSON")->required();
  compare_cmd->add_option("--out", out_dir, "output directory");

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario config");
  validate_cmd->add_option("--config", config_path, "scenario config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ecoplatoon::kExitUsage;
  }

  try {
    if (run_cmd->parsed()) {
      std::optional<ecoplatoon::Mode> mode;
      if (!mode_str.empty()) {
        try {
          mode = ecoplatoon::mode_from_string(mode_str);
        } catch (const std::exception& e) {
          std::cerr << e.what() << "\n";
          return ecoplatoon::kExitUsage;
        }
      }
      return ecoplatoon::run_command(config_path, mode, out_dir);
    }
    if (compare_cmd->parsed()) return ecoplatoon::compare_command(config_path, out_dir);
    if (validate_cmd->parsed()) return ecoplatoon::validate_command(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ecoplatoon::kExitUsage;
}
