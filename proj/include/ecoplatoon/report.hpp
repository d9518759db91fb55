#pragma once

// Plot-ready run outputs: trajectory CSV (one row per vehicle per tick),
// summary JSON, event JSON lines, and the two-mode comparison. All number
// formatting is fixed so identical runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecoplatoon/config.hpp"
#include "ecoplatoon/engine.hpp"

namespace ecoplatoon {

inline std::string trajectory_csv_header(const ScenarioConfig& cfg) {
  std::string h = "t,vehicle_id,platoon_id,arc_s,x,y,v,u,delta,fuel_rate,cum_fuel";
  for (const auto& s : cfg.route.signals) h += ",phase_" + s.id;
  return h;
}

inline void write_trajectory_csv(const std::string& path, const RunResult& result,
                                 const ScenarioConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << trajectory_csv_header(cfg) << "\n";
  char buf[256];
  for (const auto& tick : result.ticks) {
    for (std::size_t i = 0; i < tick.vehicles.size(); ++i) {
      const auto& v = tick.vehicles[i];
      std::snprintf(buf, sizeof buf,
                    "%.1f,%zu,%d,%.3f,%.3f,%.3f,%.6f,%.6f,%.6f,%.9f,%.9f", tick.t, i,
                    v.platoon_id, v.arc_s, v.x, v.y, v.v, v.u, v.steer, v.fuel_rate,
                    v.cum_fuel);
      out << buf;
      for (const auto& sig : tick.signals) out << ',' << to_string(sig.phase);
      out << '\n';
    }
  }
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j{{"mode", s.mode},
                   {"per_vehicle_fuel_l", s.per_vehicle_fuel},
                   {"leader_fuel_l", s.leader_fuel},
                   {"total_fuel_l", s.total_fuel},
                   {"per_vehicle_stops", s.per_vehicle_stops},
                   {"travel_time_s", s.travel_time},
                   {"split_count", s.split_count},
                   {"split_times_s", s.split_times},
                   {"laps_completed", s.laps_completed},
                   {"collision", s.collision}};
  if (s.collision) j["collision_report"] = s.collision_report;
  return j;
}

inline void write_summary_json(const std::string& path, const RunSummary& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << summary_to_json(s).dump(2) << "\n";
}

inline void write_events_jsonl(const std::string& path,
                               const std::vector<std::string>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& e : events) out << e << "\n";
}

inline double savings_pct(double baseline, double advisory) {
  if (baseline == 0) return 0;
  return (baseline - advisory) / baseline * 100.0;
}

// One decimal, truncated toward zero (0.63 -> 0.37 shows as 41.2%).
inline std::string format_savings(double pct) {
  const double trunc = std::trunc(pct * 10.0) / 10.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", trunc);
  return buf;
}

struct Comparison {
  RunSummary baseline;
  RunSummary advisory;
  double leader_savings_pct = 0;
  double platoon_savings_pct = 0;
};

inline Comparison compare_summaries(const RunSummary& baseline,
                                    const RunSummary& advisory) {
  Comparison c{baseline, advisory, savings_pct(baseline.leader_fuel, advisory.leader_fuel),
               savings_pct(baseline.total_fuel, advisory.total_fuel)};
  return c;
}

inline nlohmann::json comparison_to_json(const Comparison& c) {
  return nlohmann::json{{"baseline", summary_to_json(c.baseline)},
                        {"advisory", summary_to_json(c.advisory)},
                        {"leader_savings_pct", c.leader_savings_pct},
                        {"platoon_savings_pct", c.platoon_savings_pct},
                        {"leader_savings_display", format_savings(c.leader_savings_pct)},
                        {"platoon_savings_display", format_savings(c.platoon_savings_pct)}};
}

inline void write_comparison_json(const std::string& path, const Comparison& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << comparison_to_json(c).dump(2) << "\n";
}

inline std::string comparison_table(const Comparison& c) {
  char buf[512];
  std::string t;
  std::snprintf(buf, sizeof buf, "%-28s  %-18s  %s\n", "Scenario", "Leader Fuel (L)",
                "Total Platoon Fuel (L)");
  t += buf;
  std::snprintf(buf, sizeof buf, "%-28s  %-18.4f  %.4f\n", "No Green Window Advisory",
                c.baseline.leader_fuel, c.baseline.total_fuel);
  t += buf;
  std::snprintf(buf, sizeof buf, "%-28s  %-18.4f  %.4f\n", "With Green Window Advisory",
                c.advisory.leader_fuel, c.advisory.total_fuel);
  t += buf;
  std::snprintf(buf, sizeof buf, "%-28s  %-18s  %s\n", "Fuel Savings (%)",
                (format_savings(c.leader_savings_pct) + "%").c_str(),
                (format_savings(c.platoon_savings_pct) + "%").c_str());
  t += buf;
  return t;
}

}  // namespace ecoplatoon
