#pragma once

// Green-window speed advisory with platoon split decisions. Pure decision
// functions: the consensus memory is passed in and returned explicitly, so
// a platoon's advisory is replayable and independent of any other platoon.
//
// All window comparisons happen in time relative to "now"; the absolute
// GreenWindow from SPaT is converted once on entry.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecoplatoon/messages.hpp"

namespace ecoplatoon {

struct PlatoonMember {
  int vehicle_id = 0;
  double position = 0;            // arc length of the front bumper [m]
  double velocity = 0;            // [m/s]
  double length = 0;              // [m]
  double gap_to_predecessor = 0;  // bumper to bumper [m]; leader: 0
};

// Ordered platoon view (leader first) assembled from member PCMs.
struct PlatoonSnapshot {
  std::vector<PlatoonMember> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }

  // Leader front to member i rear: lengths of members 0..i plus the gaps
  // between them.
  double length_up_to(std::size_t i) const {
    double len = 0;
    for (std::size_t k = 0; k <= i && k < members.size(); ++k) {
      if (k > 0) len += members[k].gap_to_predecessor;
      len += members[k].length;
    }
    return len;
  }

  // d_platoon: leader front to tail rear.
  double total_length() const {
    return members.empty() ? 0.0 : length_up_to(members.size() - 1);
  }
};

struct AdvisoryLimits {
  double v_limit = 13.89;        // corridor speed limit [m/s]
  double v_floor = 1.0;          // slowest useful advisory speed [m/s]
  double window_epsilon = 0.1;   // [s], guards division at window opening
  double initial_delay = 5.0;    // stabilization phase [s]
  double consensus_period = 0.2; // split stability requirement [s]
  double v_sat = 0.0;            // saturation flow velocity; declared input
                                 // of the coordination procedure, unused by it
};

enum class AdvisoryReason {
  Whole,
  SaturationSplit,
  ArrivalSplit,
  HoldNoSpat,
  HoldDelay,
  InfeasibleStop,
};

inline const char* to_string(AdvisoryReason r) {
  switch (r) {
    case AdvisoryReason::Whole: return "whole";
    case AdvisoryReason::SaturationSplit: return "saturation-split";
    case AdvisoryReason::ArrivalSplit: return "arrival-split";
    case AdvisoryReason::HoldNoSpat: return "hold-no-spat";
    case AdvisoryReason::HoldDelay: return "hold-delay";
    case AdvisoryReason::InfeasibleStop: return "infeasible-stop";
  }
  return "?";
}

struct AdvisoryDecision {
  double v_ref = 0;
  std::vector<int> front;  // prefix of the platoon order, always holds the leader
  std::vector<int> rear;
  bool pending_consensus = false;
  AdvisoryReason reason = AdvisoryReason::Whole;

  bool is_published_split() const { return !rear.empty() && !pending_consensus; }
};

// Stability memory for split proposals, keyed by the proposed front size.
struct ConsensusState {
  int pending_front_size = -1;
  double pending_since = 0;

  bool idle() const { return pending_front_size < 0; }
  void reset() { pending_front_size = -1; }
};

struct FeasibleVelocities {
  double v_min = 0;
  double v_max = 0;
  bool feasible = false;
};

inline bool initial_delay_active(double t, double delay = 5.0) { return t < delay; }

// Velocity band that reaches the stop line inside the window: the upper
// bound arrives at the window opening (capped by the speed limit), the
// lower bound arrives exactly at the window close. When even the speed
// limit cannot make the window close, the window is infeasible and the
// caller holds its velocity (and will stop at the line).
inline FeasibleVelocities get_feasible_velocities(double d_tl, const GreenWindow& window,
                                                  double now, const AdvisoryLimits& lim) {
  if (d_tl <= 0) throw std::invalid_argument("get_feasible_velocities: d_tl must be > 0");
  const double to_start = window.t_start - now;
  const double to_end = window.t_end - now;
  FeasibleVelocities out;
  if (to_end <= lim.window_epsilon) return out;  // window closing now
  const double required_end = d_tl / to_end;
  if (required_end > lim.v_limit) return out;
  out.v_max = std::clamp(d_tl / std::max(to_start, lim.window_epsilon), lim.v_floor,
                         lim.v_limit);
  out.v_min = std::clamp(required_end, lim.v_floor, out.v_max);
  out.feasible = true;
  return out;
}

// Whether the whole platoon body can clear within the green span at a
// feasible speed: v_required = d_platoon / (window close - window open),
// with the span measured from now when the light is already green.
inline bool saturation_check(const PlatoonSnapshot& snapshot, double d_tl,
                             const GreenWindow& window, double now, double v_max_f) {
  (void)d_tl;
  const double span = window.t_end - std::max(window.t_start, now);
  if (span <= 0) return false;
  return snapshot.total_length() / span <= v_max_f;
}

struct ArrivalTimes {
  double t_lead = 0;  // relative to now [s]
  double t_last = 0;
};

inline ArrivalTimes get_arrival_times(double v, double d_tl,
                                      const PlatoonSnapshot& snapshot) {
  if (v <= 0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return {d_tl / v, (d_tl + snapshot.total_length()) / v};
}

// Refine a candidate speed so the leader's arrival lands in the window:
// slow down when early, speed up when late, then clamp into the feasible
// band. Window times are relative to now.
inline double check_leader_arrival(double v, double d_tl, double t_g_start,
                                   double t_g_end, const FeasibleVelocities& fv) {
  if (v > 0) {
    const double t_arrival = d_tl / v;
    if (t_arrival < t_g_start && t_g_start > 0) {
      v = std::max(fv.v_min, d_tl / t_g_start);
    } else if (t_arrival > t_g_end && t_g_end > 0) {
      v = std::min(fv.v_max, d_tl / t_g_end);
    }
  }
  return std::clamp(v, fv.v_min, fv.v_max);
}

// The feasible velocity requiring the least speed change.
inline double optimize_velocity(double v_min_f, double v_max_f, double v_current) {
  if (v_min_f > v_max_f)
    throw std::invalid_argument("optimize_velocity: empty velocity band");
  return std::clamp(v_current, v_min_f, v_max_f);
}

// Front/rear partition: walk the platoon from the leader and keep members
// while the vehicle's rear still clears the stop line before the window
// closes at v_ref. The leader is always in front. t_g_end is relative.
inline std::pair<std::vector<int>, std::vector<int>> split_platoon(
    const PlatoonSnapshot& snapshot, double v_ref, double d_tl, double t_g_end) {
  if (snapshot.empty()) throw std::invalid_argument("split_platoon: empty platoon");
  std::vector<int> front;
  front.reserve(snapshot.size());
  front.push_back(snapshot.members[0].vehicle_id);
  std::vector<int> rear;
  double cum_len = snapshot.members[0].length;
  std::size_t i = 1;
  if (v_ref > 0) {
    for (; i < snapshot.members.size(); ++i) {
      cum_len += snapshot.members[i].gap_to_predecessor + snapshot.members[i].length;
      if ((d_tl + cum_len) / v_ref > t_g_end) break;
      front.push_back(snapshot.members[i].vehicle_id);
    }
  }
  rear.reserve(snapshot.size() - i);
  for (; i < snapshot.members.size(); ++i)
    rear.push_back(snapshot.members[i].vehicle_id);
  return {std::move(front), std::move(rear)};
}

// Reference velocity for a front subgroup after a split: land the leader in
// the window, then raise as needed so the subgroup's tail still clears the
// close; clamped into the feasible band.
inline double adjust_for_split(double front_length, double d_tl, double t_g_start,
                               double t_g_end, const FeasibleVelocities& fv,
                               double v_start) {
  double v = check_leader_arrival(v_start, d_tl, t_g_start, t_g_end, fv);
  if (t_g_end > 0) v = std::max(v, (d_tl + front_length) / t_g_end);
  return std::clamp(v, fv.v_min, fv.v_max);
}

namespace detail {

inline std::vector<int> all_ids(const PlatoonSnapshot& snapshot) {
  std::vector<int> ids;
  ids.reserve(snapshot.size());
  for (const auto& m : snapshot.members) ids.push_back(m.vehicle_id);
  return ids;
}

inline double front_length(const PlatoonSnapshot& snapshot, std::size_t front_size) {
  return front_size == 0 ? 0.0 : snapshot.length_up_to(front_size - 1);
}

}  // namespace detail

struct CoordinationResult {
  AdvisoryDecision decision;
  ConsensusState consensus;
};

// Full per-tick coordination for one platoon leader:
//   1. stabilization phase and missing-SPaT cases hold the current velocity;
//   2. an infeasible window holds the velocity, flagged for stopping;
//   3. a failed saturation check mandates a split;
//   4. otherwise optimize within the band and verify both arrival
//      conditions; on failure split adaptively.
// Splits are evaluated at the top of the feasible band (throughput), their
// front subgroup velocity is refined afterwards, and any split must stay
// stable for the consensus period before it is published; until then the
// previous decision stands.
inline CoordinationResult coordinate(const PlatoonSnapshot& snapshot, double d_tl,
                                     const std::optional<GreenWindow>& window,
                                     double v_current, double now,
                                     const AdvisoryLimits& lim,
                                     ConsensusState consensus) {
  if (snapshot.empty()) throw std::invalid_argument("coordinate: empty platoon");

  auto hold = [&](AdvisoryReason why) {
    consensus.reset();
    return CoordinationResult{{v_current, detail::all_ids(snapshot), {}, false, why},
                              consensus};
  };

  if (initial_delay_active(now, lim.initial_delay)) return hold(AdvisoryReason::HoldDelay);
  if (!window) return hold(AdvisoryReason::HoldNoSpat);

  const FeasibleVelocities fv = get_feasible_velocities(d_tl, *window, now, lim);
  if (!fv.feasible) return hold(AdvisoryReason::InfeasibleStop);

  const double rel_start = std::max(0.0, window->t_start - now);
  const double rel_end = window->t_end - now;

  double v_ref = 0;
  std::vector<int> front, rear;
  AdvisoryReason reason;

  if (!saturation_check(snapshot, d_tl, *window, now, fv.v_max)) {
    std::tie(front, rear) = split_platoon(snapshot, fv.v_max, d_tl, rel_end);
    v_ref = adjust_for_split(detail::front_length(snapshot, front.size()), d_tl,
                             rel_start, rel_end, fv, fv.v_max);
    reason = AdvisoryReason::SaturationSplit;
  } else {
    // The candidate is the fastest feasible passage: the cruise limit
    // clamped into the band lands on the upper bound (arrive when the
    // window opens), which maximizes the arrival speed and so minimizes
    // the energy given back to braking. v_current only governs the hold
    // branches above.
    const double v_cand = optimize_velocity(fv.v_min, fv.v_max, lim.v_limit);
    const ArrivalTimes at = get_arrival_times(v_cand, d_tl, snapshot);
    if (at.t_lead >= rel_start && at.t_lead <= rel_end && at.t_last <= rel_end) {
      consensus.reset();
      return {{v_cand, detail::all_ids(snapshot), {}, false, AdvisoryReason::Whole},
              consensus};
    }
    std::tie(front, rear) = split_platoon(snapshot, fv.v_max, d_tl, rel_end);
    v_ref = adjust_for_split(detail::front_length(snapshot, front.size()), d_tl,
                             rel_start, rel_end, fv, v_cand);
    reason = AdvisoryReason::ArrivalSplit;
  }

  if (rear.empty()) {
    // The split degenerated to a whole-platoon speed adjustment.
    consensus.reset();
    return {{v_ref, std::move(front), {}, false, reason}, consensus};
  }

  const int size = static_cast<int>(front.size());
  if (consensus.pending_front_size != size) {
    consensus.pending_front_size = size;
    consensus.pending_since = now;
  }
  if (now - consensus.pending_since >= lim.consensus_period) {
    consensus.reset();
    return {{v_ref, std::move(front), std::move(rear), false, reason}, consensus};
  }
  // Pending: the previous decision stands until the proposal survives.
  return {{v_current, detail::all_ids(snapshot), {}, true, reason}, consensus};
}

}  // namespace ecoplatoon
