#pragma once

// Entry points behind the `sim` binary. Exit codes: 0 success, 2 for
// usage/config problems, 3 when a run aborts on a collision.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ecoplatoon/config.hpp"
#include "ecoplatoon/engine.hpp"
#include "ecoplatoon/report.hpp"

namespace ecoplatoon {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCollision = 3;

// SIM_LOG=quiet silences progress lines on stderr.
inline bool log_enabled() {
  const char* v = std::getenv("SIM_LOG");
  return v == nullptr || std::string(v) != "quiet";
}

inline void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << msg << "\n";
}

namespace detail {

inline void write_run_outputs(const std::filesystem::path& dir, const RunResult& result,
                              const ScenarioConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_trajectory_csv((dir / "trajectory.csv").string(), result, cfg);
  write_summary_json((dir / "summary.json").string(), result.summary);
  write_events_jsonl((dir / "events.jsonl").string(), result.events);
}

}  // namespace detail

inline int run_command(const std::string& config_path, std::optional<Mode> mode_override,
                       const std::string& out_dir) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    if (mode_override) cfg.mode = *mode_override;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  log_line(std::string("running ") + to_string(cfg.mode) + " scenario (" +
           std::to_string(cfg.vehicle_count) + " vehicles, " + std::to_string(cfg.laps) +
           " laps)");
  const RunResult result = run(cfg);
  detail::write_run_outputs(out_dir, result, cfg);
  if (result.summary.collision) {
    std::cerr << result.summary.collision_report << "\n";
    return kExitCollision;
  }
  log_line("done: " + std::to_string(result.ticks.size()) + " ticks, outputs in " +
           out_dir);
  return kExitOk;
}

inline int compare_command(const std::string& config_path, const std::string& out_dir) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  // both runs share one config; only the mode flag differs
  ScenarioConfig baseline_cfg = cfg;
  baseline_cfg.mode = Mode::Baseline;
  ScenarioConfig advisory_cfg = cfg;
  advisory_cfg.mode = Mode::Advisory;

  log_line("running baseline scenario");
  const RunResult baseline = run(baseline_cfg);
  log_line("running advisory scenario");
  const RunResult advisory = run(advisory_cfg);

  const std::filesystem::path dir(out_dir);
  detail::write_run_outputs(dir / "baseline", baseline, baseline_cfg);
  detail::write_run_outputs(dir / "advisory", advisory, advisory_cfg);

  const Comparison cmp = compare_summaries(baseline.summary, advisory.summary);
  std::filesystem::create_directories(dir);
  write_comparison_json((dir / "comparison.json").string(), cmp);
  std::cout << comparison_table(cmp);

  if (baseline.summary.collision || advisory.summary.collision) {
    const auto& bad = baseline.summary.collision ? baseline.summary : advisory.summary;
    std::cerr << bad.mode << " run: " << bad.collision_report << "\n";
    return kExitCollision;
  }
  return kExitOk;
}

inline int validate_command(const std::string& config_path) {
  try {
    load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cout << "config ok: " << config_path << "\n";
  return kExitOk;
}

}  // namespace ecoplatoon
