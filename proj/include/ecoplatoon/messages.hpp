#pragma once

// V2X payloads exchanged on the corridor: SPaT broadcasts from signals,
// PCM reports from platoon members, PAM advertisements from leaders.
// All three serialize to JSON lines for the event log.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecoplatoon {

enum class Phase { Green, Amber, Red };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Green: return "green";
    case Phase::Amber: return "amber";
    case Phase::Red: return "red";
  }
  return "?";
}

inline Phase phase_from_string(const std::string& s) {
  if (s == "green") return Phase::Green;
  if (s == "amber") return Phase::Amber;
  if (s == "red") return Phase::Red;
  throw std::invalid_argument("unknown phase: " + s);
}

// One (phase, duration) entry of a fixed-time signal plan.
using CyclePlan = std::vector<std::pair<Phase, double>>;

inline double cycle_period(const CyclePlan& plan) {
  double p = 0;
  for (const auto& [ph, d] : plan) p += d;
  return p;
}

// Absolute-time interval during which a signal is passable.
struct GreenWindow {
  double t_start = 0;  // [s]
  double t_end = 0;    // [s]

  double span() const { return t_end - t_start; }
};

struct SpatMessage {
  std::string signal_id;
  Phase phase = Phase::Red;
  double phase_remaining = 0;  // [s]
  CyclePlan cycle_plan;
  double timestamp = 0;  // simulation time [s]

  void validate() const {
    if (phase_remaining < 0)
      throw std::invalid_argument("spat: phase_remaining must be >= 0");
    if (cycle_plan.empty())
      throw std::invalid_argument("spat: cycle_plan must not be empty");
    bool has_green = false;
    for (const auto& [ph, d] : cycle_plan) {
      if (d <= 0) throw std::invalid_argument("spat: cycle durations must be > 0");
      if (ph == Phase::Green) has_green = true;
    }
    if (!has_green)
      throw std::invalid_argument("spat: cycle_plan contains no green phase");
    // Current position in the plan is the first entry matching the phase.
    for (const auto& [ph, d] : cycle_plan) {
      if (ph == phase) {
        if (phase_remaining > d + 1e-9)
          throw std::invalid_argument("spat: phase_remaining exceeds phase duration");
        return;
      }
    }
    throw std::invalid_argument("spat: current phase not present in cycle_plan");
  }
};

// Per-vehicle state report used by the leader (one per member per tick).
struct PlatoonControlMessage {
  int vehicle_id = 0;
  double position_along_route = 0;  // arc length, modulo route length [m]
  double velocity = 0;              // [m/s]
  double vehicle_length = 0;        // [m]
  double gap_to_predecessor = 0;    // bumper to bumper [m]; 0 for the leader
  double timestamp = 0;

  void validate() const {
    if (velocity < 0) throw std::invalid_argument("pcm: velocity must be >= 0");
    if (vehicle_length <= 0) throw std::invalid_argument("pcm: vehicle_length must be > 0");
    if (gap_to_predecessor < 0) throw std::invalid_argument("pcm: gap must be >= 0");
  }
};

// Leader-originated platoon metadata.
struct PlatoonAwarenessMessage {
  struct SplitDecision {
    std::vector<int> front_ids;
    std::vector<int> rear_ids;
  };

  int leader_id = 0;
  int platoon_size = 1;
  double platoon_length = 0;         // leader front to tail rear [m]
  double predicted_arrival_time = 0; // at the next stop line [s]
  std::optional<SplitDecision> split_decision;
  double timestamp = 0;

  void validate(double min_vehicle_length) const {
    if (platoon_size < 1) throw std::invalid_argument("pam: platoon_size must be >= 1");
    if (platoon_length < platoon_size * min_vehicle_length - 1e-9)
      throw std::invalid_argument("pam: platoon_length below size * min vehicle length");
    if (split_decision) {
      const auto& sd = *split_decision;
      if (sd.front_ids.empty())
        throw std::invalid_argument("pam: split front must contain the leader");
      for (int id : sd.front_ids)
        if (std::find(sd.rear_ids.begin(), sd.rear_ids.end(), id) != sd.rear_ids.end())
          throw std::invalid_argument("pam: split front/rear must be disjoint");
    }
  }
};

constexpr double kDsrcRangeMeters = 300.0;

// True iff the forward arc distance from the leader to the signal (wrapping
// around the loop) is within DSRC delivery range. SPaT delivery only; PCM
// and PAM inside the platoon are not range gated.
inline bool in_dsrc_range(double leader_position, double signal_position,
                          double route_length, double range = kDsrcRangeMeters) {
  if (route_length <= 0)
    throw std::invalid_argument("in_dsrc_range: route_length must be > 0");
  double fwd = std::fmod(signal_position - leader_position, route_length);
  if (fwd < 0) fwd += route_length;
  return fwd <= range;
}

// Absolute-time interval of the current green phase (if green now), else of
// the next green obtained by rolling the cycle forward from the current
// phase and its remaining time. Amber counts as not passable.
inline GreenWindow next_green_window(const SpatMessage& spat, double now) {
  spat.validate();
  if (spat.phase == Phase::Green && spat.phase_remaining > 0)
    return GreenWindow{now, now + spat.phase_remaining};

  std::size_t idx = 0;
  for (; idx < spat.cycle_plan.size(); ++idx)
    if (spat.cycle_plan[idx].first == spat.phase) break;

  double cursor = now + spat.phase_remaining;
  for (std::size_t k = 1; k <= spat.cycle_plan.size(); ++k) {
    const auto& [ph, dur] = spat.cycle_plan[(idx + k) % spat.cycle_plan.size()];
    if (ph == Phase::Green) return GreenWindow{cursor, cursor + dur};
    cursor += dur;
  }
  throw std::invalid_argument("next_green_window: cycle_plan contains no green phase");
}

inline void to_json(nlohmann::json& j, const GreenWindow& w) {
  j = nlohmann::json{{"t_g_start", w.t_start}, {"t_g_end", w.t_end}};
}

inline void to_json(nlohmann::json& j, const SpatMessage& m) {
  nlohmann::json plan = nlohmann::json::array();
  for (const auto& [ph, d] : m.cycle_plan) plan.push_back({to_string(ph), d});
  j = nlohmann::json{{"signal_id", m.signal_id},
                     {"phase", to_string(m.phase)},
                     {"phase_remaining", m.phase_remaining},
                     {"cycle_plan", plan},
                     {"timestamp", m.timestamp}};
}

inline void to_json(nlohmann::json& j, const PlatoonControlMessage& m) {
  j = nlohmann::json{{"vehicle_id", m.vehicle_id},
                     {"position_along_route", m.position_along_route},
                     {"velocity", m.velocity},
                     {"vehicle_length", m.vehicle_length},
                     {"gap_to_predecessor", m.gap_to_predecessor},
                     {"timestamp", m.timestamp}};
}

inline void to_json(nlohmann::json& j, const PlatoonAwarenessMessage& m) {
  j = nlohmann::json{{"leader_id", m.leader_id},
                     {"platoon_size", m.platoon_size},
                     {"platoon_length", m.platoon_length},
                     {"predicted_arrival_time", m.predicted_arrival_time},
                     {"timestamp", m.timestamp}};
  if (m.split_decision) {
    j["split_decision"] = {{"front_ids", m.split_decision->front_ids},
                           {"rear_ids", m.split_decision->rear_ids}};
  }
}

}  // namespace ecoplatoon
