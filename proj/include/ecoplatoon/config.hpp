#pragma once

// Scenario configuration: one JSON document covering the route, signal
// plans, vehicle/controller parameters, and run settings. Any omitted key
// falls back to the documented default, so "{}" is the default scenario.

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecoplatoon/advisory.hpp"
#include "ecoplatoon/cacc.hpp"
#include "ecoplatoon/dynamics.hpp"
#include "ecoplatoon/fuel.hpp"
#include "ecoplatoon/mpc.hpp"
#include "ecoplatoon/world.hpp"

namespace ecoplatoon {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Advisory, Baseline };

inline const char* to_string(Mode m) {
  return m == Mode::Advisory ? "advisory" : "baseline";
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "advisory") return Mode::Advisory;
  if (s == "baseline") return Mode::Baseline;
  throw ConfigError("mode: must be \"advisory\" or \"baseline\", got \"" + s + "\"");
}

struct SignalSpec {
  std::string id;
  double position = 0;  // arc length of the stop line [m]
  double offset = 0;    // cycle phase offset [s]
  CyclePlan cycle = {{Phase::Green, 15}, {Phase::Amber, 3}, {Phase::Red, 20}};
};

struct RouteSpec {
  double length = 800.0;
  double waypoint_spacing = 1.0;
  std::vector<SignalSpec> signals = {{"tl1", 220, 0}, {"tl2", 420, 12}, {"tl3", 580, 24}};
  std::vector<Corridor> corridors = Route::default_corridors();
};

struct BaselineConfig {
  double sight_range = 100.0;   // phase visibility [m]
  double comfort_decel = 2.0;   // stop-envelope deceleration [m/s^2]
  double max_decel = 3.0;       // cap on signal braking [m/s^2]
  double stop_margin = 2.0;     // stop this far before the line [m]
};

struct ScenarioConfig {
  Mode mode = Mode::Advisory;
  int laps = 2;
  int vehicle_count = 8;
  double spawn_gap = 10.0;   // standstill bumper-to-bumper spacing [m]
  double dt = 0.1;           // tick length [s]
  double max_sim_time = 600.0;
  unsigned int seed = 0;     // reserved; the default run is seedless-deterministic
  double dsrc_range = kDsrcRangeMeters;

  RouteSpec route;
  VehicleParams vehicle;
  MpcConfig mpc;
  CaccConfig cacc;
  FuelCoefficients fuel;
  AdvisoryLimits advisory;
  BaselineConfig baseline;

  void validate() const {
    if (vehicle_count < 1) throw ConfigError("vehicle_count: must be >= 1");
    if (laps < 1) throw ConfigError("laps: must be >= 1");
    if (dt <= 0) throw ConfigError("dt: must be > 0");
    if (max_sim_time <= 0) throw ConfigError("max_sim_time: must be > 0");
    if (dsrc_range <= 0) throw ConfigError("dsrc_range: must be > 0");
    if (route.length <= 0) throw ConfigError("route.length: must be > 0");
    if (route.waypoint_spacing <= 0) throw ConfigError("route.waypoint_spacing: must be > 0");
    if (route.signals.empty()) throw ConfigError("route.signals: must not be empty");
    for (std::size_t a = 0; a < route.signals.size(); ++a)
      for (std::size_t b = a + 1; b < route.signals.size(); ++b)
        if (route.signals[a].id == route.signals[b].id)
          throw ConfigError("route.signals: duplicate id \"" + route.signals[a].id + "\"");
    try {
      vehicle.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("vehicle: ") + e.what());
    }
    try {
      mpc.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("mpc: ") + e.what());
    }
    try {
      cacc.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cacc: ") + e.what());
    }
    try {
      fuel.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("fuel: ") + e.what());
    }
    if (spawn_gap < desired_gap(0.0, cacc))
      throw ConfigError("spawn_gap: must be >= the standstill desired gap");
    if (advisory.v_limit <= 0 || advisory.v_limit > vehicle.v_max + 1e-9)
      throw ConfigError("advisory.v_limit: must be in (0, vehicle.v_max]");
    if (advisory.v_floor <= 0 || advisory.v_floor > advisory.v_limit)
      throw ConfigError("advisory.v_floor: must be in (0, v_limit]");
    if (advisory.initial_delay < 0) throw ConfigError("advisory.initial_delay: must be >= 0");
    if (advisory.consensus_period < 0)
      throw ConfigError("advisory.consensus_period: must be >= 0");
    try {
      for (const auto& s : build_signals()) s.validate();
      build_route();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("route: ") + e.what());
    }
  }

  Route build_route() const {
    std::vector<SignalPost> posts;
    posts.reserve(route.signals.size());
    for (const auto& s : route.signals) posts.push_back({s.id, s.position});
    return Route::circle(route.length, route.waypoint_spacing, route.corridors, posts);
  }

  std::vector<SignalController> build_signals() const {
    std::vector<SignalController> out;
    out.reserve(route.signals.size());
    for (const auto& s : route.signals) out.push_back({s.id, s.cycle, s.offset});
    return out;
  }
};

namespace detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(scope + key + ": invalid value type");
  }
}

inline CyclePlan cycle_from_json(const nlohmann::json& j, const std::string& scope) {
  CyclePlan plan;
  if (!j.is_array()) throw ConfigError(scope + "cycle: must be an array of [phase, seconds]");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError(scope + "cycle: entries must be [phase, seconds]");
    try {
      plan.emplace_back(phase_from_string(e[0].get<std::string>()), e[1].get<double>());
    } catch (const std::exception&) {
      throw ConfigError(scope + "cycle: entries must be [phase, seconds]");
    }
  }
  return plan;
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  ScenarioConfig c;
  if (j.contains("mode")) {
    std::string m;
    read(j, "mode", m, "");
    c.mode = mode_from_string(m);
  }
  read(j, "laps", c.laps, "");
  read(j, "vehicle_count", c.vehicle_count, "");
  read(j, "spawn_gap", c.spawn_gap, "");
  read(j, "dt", c.dt, "");
  read(j, "max_sim_time", c.max_sim_time, "");
  read(j, "seed", c.seed, "");
  read(j, "dsrc_range", c.dsrc_range, "");

  if (j.contains("route")) {
    const auto& r = j.at("route");
    read(r, "length", c.route.length, "route.");
    read(r, "waypoint_spacing", c.route.waypoint_spacing, "route.");
    if (r.contains("signals")) {
      c.route.signals.clear();
      for (const auto& s : r.at("signals")) {
        SignalSpec spec;
        if (!s.contains("id")) throw ConfigError("route.signals: entry missing id");
        read(s, "id", spec.id, "route.signals.");
        read(s, "position", spec.position, "route.signals.");
        read(s, "offset", spec.offset, "route.signals.");
        if (s.contains("cycle"))
          spec.cycle = detail::cycle_from_json(s.at("cycle"), "route.signals.");
        c.route.signals.push_back(std::move(spec));
      }
    }
    if (r.contains("corridors")) {
      c.route.corridors.clear();
      for (const auto& e : r.at("corridors")) {
        Corridor corr;
        read(e, "name", corr.name, "route.corridors.");
        read(e, "start_s", corr.start_s, "route.corridors.");
        read(e, "end_s", corr.end_s, "route.corridors.");
        c.route.corridors.push_back(std::move(corr));
      }
    }
  }

  if (j.contains("vehicle")) {
    const auto& v = j.at("vehicle");
    auto& p = c.vehicle;
    read(v, "cog_to_front_axle", p.cog_to_front_axle, "vehicle.");
    read(v, "drag_coeff", p.drag_coeff, "vehicle.");
    read(v, "air_density", p.air_density, "vehicle.");
    read(v, "frontal_area", p.frontal_area, "vehicle.");
    read(v, "mass", p.mass, "vehicle.");
    read(v, "rolling_resistance", p.rolling_resistance, "vehicle.");
    read(v, "gravity", p.gravity, "vehicle.");
    read(v, "u_min", p.u_min, "vehicle.");
    read(v, "u_max", p.u_max, "vehicle.");
    read(v, "steer_min", p.steer_min, "vehicle.");
    read(v, "steer_max", p.steer_max, "vehicle.");
    read(v, "v_min", p.v_min, "vehicle.");
    read(v, "v_max", p.v_max, "vehicle.");
    read(v, "length", p.length, "vehicle.");
  }

  if (j.contains("mpc")) {
    const auto& m = j.at("mpc");
    auto& p = c.mpc;
    read(m, "horizon", p.horizon, "mpc.");
    read(m, "dt", p.dt, "mpc.");
    read(m, "w_cte", p.w_cte, "mpc.");
    read(m, "w_yaw_err", p.w_yaw_err, "mpc.");
    read(m, "w_v", p.w_v, "mpc.");
    read(m, "w_dsteer", p.w_dsteer, "mpc.");
    read(m, "w_du", p.w_du, "mpc.");
    read(m, "w_accel_pos", p.w_accel_pos, "mpc.");
    read(m, "w_vmax", p.w_vmax, "mpc.");
    read(m, "max_iterations", p.max_iterations, "mpc.");
    read(m, "tolerance", p.tolerance, "mpc.");
  }

  if (j.contains("cacc")) {
    const auto& k = j.at("cacc");
    auto& p = c.cacc;
    read(k, "s_min", p.s_min, "cacc.");
    read(k, "s_max", p.s_max, "cacc.");
    read(k, "s_0", p.s_0, "cacc.");
    read(k, "t_gap", p.t_gap, "cacc.");
    read(k, "k1_min", p.k1_min, "cacc.");
    read(k, "k1_max", p.k1_max, "cacc.");
    read(k, "k2_min", p.k2_min, "cacc.");
    read(k, "k2_max", p.k2_max, "cacc.");
    read(k, "integral_limit", p.integral_limit, "cacc.");
    if (k.contains("pid_bands")) {
      p.pid_bands.clear();
      for (const auto& b : k.at("pid_bands")) {
        PidBand band;
        read(b, "v_from", band.v_from, "cacc.pid_bands.");
        read(b, "v_to", band.v_to, "cacc.pid_bands.");
        read(b, "kp", band.kp, "cacc.pid_bands.");
        read(b, "ki", band.ki, "cacc.pid_bands.");
        read(b, "kd", band.kd, "cacc.pid_bands.");
        p.pid_bands.push_back(band);
      }
    }
  }

  if (j.contains("fuel")) {
    const auto& f = j.at("fuel");
    auto& p = c.fuel;
    read(f, "b0", p.b0, "fuel.");
    read(f, "b1", p.b1, "fuel.");
    read(f, "b2", p.b2, "fuel.");
    read(f, "b3", p.b3, "fuel.");
    read(f, "c0", p.c0, "fuel.");
    read(f, "c1", p.c1, "fuel.");
    read(f, "c2", p.c2, "fuel.");
    read(f, "f_idle", p.f_idle, "fuel.");
  }

  if (j.contains("advisory")) {
    const auto& a = j.at("advisory");
    auto& p = c.advisory;
    read(a, "v_limit", p.v_limit, "advisory.");
    read(a, "v_floor", p.v_floor, "advisory.");
    read(a, "window_epsilon", p.window_epsilon, "advisory.");
    read(a, "initial_delay", p.initial_delay, "advisory.");
    read(a, "consensus_period", p.consensus_period, "advisory.");
    read(a, "v_sat", p.v_sat, "advisory.");
  }

  if (j.contains("baseline")) {
    const auto& b = j.at("baseline");
    auto& p = c.baseline;
    read(b, "sight_range", p.sight_range, "baseline.");
    read(b, "comfort_decel", p.comfort_decel, "baseline.");
    read(b, "max_decel", p.max_decel, "baseline.");
    read(b, "stop_margin", p.stop_margin, "baseline.");
  }

  // Keep the advisory limit tied to the vehicle bound unless overridden.
  if (!(j.contains("advisory") && j.at("advisory").contains("v_limit")))
    c.advisory.v_limit = c.vehicle.v_max;

  return c;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json signals = nlohmann::json::array();
  for (const auto& s : c.route.signals) {
    nlohmann::json cycle = nlohmann::json::array();
    for (const auto& [ph, d] : s.cycle) cycle.push_back({to_string(ph), d});
    signals.push_back({{"id", s.id}, {"position", s.position}, {"offset", s.offset},
                       {"cycle", cycle}});
  }
  nlohmann::json corridors = nlohmann::json::array();
  for (const auto& corr : c.route.corridors)
    corridors.push_back({{"name", corr.name}, {"start_s", corr.start_s},
                         {"end_s", corr.end_s}});
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : c.cacc.pid_bands)
    bands.push_back({{"v_from", b.v_from}, {"v_to", b.v_to}, {"kp", b.kp},
                     {"ki", b.ki}, {"kd", b.kd}});
  return nlohmann::json{
      {"mode", to_string(c.mode)},
      {"laps", c.laps},
      {"vehicle_count", c.vehicle_count},
      {"spawn_gap", c.spawn_gap},
      {"dt", c.dt},
      {"max_sim_time", c.max_sim_time},
      {"seed", c.seed},
      {"dsrc_range", c.dsrc_range},
      {"route",
       {{"length", c.route.length},
        {"waypoint_spacing", c.route.waypoint_spacing},
        {"signals", signals},
        {"corridors", corridors}}},
      {"vehicle",
       {{"cog_to_front_axle", c.vehicle.cog_to_front_axle},
        {"drag_coeff", c.vehicle.drag_coeff},
        {"air_density", c.vehicle.air_density},
        {"frontal_area", c.vehicle.frontal_area},
        {"mass", c.vehicle.mass},
        {"rolling_resistance", c.vehicle.rolling_resistance},
        {"gravity", c.vehicle.gravity},
        {"u_min", c.vehicle.u_min},
        {"u_max", c.vehicle.u_max},
        {"steer_min", c.vehicle.steer_min},
        {"steer_max", c.vehicle.steer_max},
        {"v_min", c.vehicle.v_min},
        {"v_max", c.vehicle.v_max},
        {"length", c.vehicle.length}}},
      {"mpc",
       {{"horizon", c.mpc.horizon},
        {"dt", c.mpc.dt},
        {"w_cte", c.mpc.w_cte},
        {"w_yaw_err", c.mpc.w_yaw_err},
        {"w_v", c.mpc.w_v},
        {"w_dsteer", c.mpc.w_dsteer},
        {"w_du", c.mpc.w_du},
        {"w_accel_pos", c.mpc.w_accel_pos},
        {"w_vmax", c.mpc.w_vmax},
        {"max_iterations", c.mpc.max_iterations},
        {"tolerance", c.mpc.tolerance}}},
      {"cacc",
       {{"s_min", c.cacc.s_min},
        {"s_max", c.cacc.s_max},
        {"s_0", c.cacc.s_0},
        {"t_gap", c.cacc.t_gap},
        {"k1_min", c.cacc.k1_min},
        {"k1_max", c.cacc.k1_max},
        {"k2_min", c.cacc.k2_min},
        {"k2_max", c.cacc.k2_max},
        {"integral_limit", c.cacc.integral_limit},
        {"pid_bands", bands}}},
      {"fuel",
       {{"b0", c.fuel.b0},
        {"b1", c.fuel.b1},
        {"b2", c.fuel.b2},
        {"b3", c.fuel.b3},
        {"c0", c.fuel.c0},
        {"c1", c.fuel.c1},
        {"c2", c.fuel.c2},
        {"f_idle", c.fuel.f_idle}}},
      {"advisory",
       {{"v_limit", c.advisory.v_limit},
        {"v_floor", c.advisory.v_floor},
        {"window_epsilon", c.advisory.window_epsilon},
        {"initial_delay", c.advisory.initial_delay},
        {"consensus_period", c.advisory.consensus_period},
        {"v_sat", c.advisory.v_sat}}},
      {"baseline",
       {{"sight_range", c.baseline.sight_range},
        {"comfort_decel", c.baseline.comfort_decel},
        {"max_decel", c.baseline.max_decel},
        {"stop_margin", c.baseline.stop_margin}}}};
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  ScenarioConfig c = config_from_json(j);
  c.validate();
  return c;
}

}  // namespace ecoplatoon
