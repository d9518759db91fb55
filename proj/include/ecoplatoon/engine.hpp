#pragma once

// Deterministic fixed-step simulation loop. Tick order: advance signals,
// build messages with DSRC gating, leader advisory + MPC, follower CACC,
// step dynamics, accrue fuel, execute consensus-confirmed splits, record.
// No wall clock, no randomness: identical configs give identical runs.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecoplatoon/advisory.hpp"
#include "ecoplatoon/cacc.hpp"
#include "ecoplatoon/config.hpp"
#include "ecoplatoon/dynamics.hpp"
#include "ecoplatoon/fuel.hpp"
#include "ecoplatoon/messages.hpp"
#include "ecoplatoon/mpc.hpp"
#include "ecoplatoon/world.hpp"

namespace ecoplatoon {

struct VehicleTick {
  double arc_s = 0;
  double x = 0;
  double y = 0;
  double v = 0;
  double u = 0;
  double steer = 0;
  double fuel_rate = 0;
  double cum_fuel = 0;
  int platoon_id = 0;
};

struct SignalTick {
  Phase phase = Phase::Red;
  double remaining = 0;
};

struct TickRecord {
  double t = 0;
  std::vector<VehicleTick> vehicles;
  std::vector<SignalTick> signals;
};

struct SplitEvent {
  double t = 0;
  int platoon_id = 0;
  int new_platoon_id = 0;
  std::vector<int> front;
  std::vector<int> rear;
  double v_ref = 0;
};

struct RunSummary {
  std::string mode;
  std::vector<double> per_vehicle_fuel;  // [L]
  double leader_fuel = 0;
  double total_fuel = 0;
  std::vector<int> per_vehicle_stops;
  double travel_time = 0;  // [s]
  int split_count = 0;
  std::vector<double> split_times;
  int laps_completed = 0;
  bool collision = false;
  std::string collision_report;
};

struct RunResult {
  std::vector<TickRecord> ticks;
  RunSummary summary;
  std::vector<std::string> events;  // JSON lines
  std::vector<SplitEvent> splits;
};

// A stop is a maximal interval with v below the standstill threshold that
// lasts at least min_duration.
inline int count_stops_series(const std::vector<double>& v, double dt,
                              double standstill = 0.1, double min_duration = 0.5) {
  int stops = 0;
  int run = 0;
  for (double s : v) {
    if (s < standstill) {
      ++run;
    } else {
      if (run * dt >= min_duration) ++stops;
      run = 0;
    }
  }
  if (run * dt >= min_duration) ++stops;
  return stops;
}

inline std::vector<int> count_stops(const std::vector<TickRecord>& ticks, double dt) {
  if (ticks.empty()) return {};
  const std::size_t n = ticks.front().vehicles.size();
  std::vector<int> out(n, 0);
  std::vector<double> series(ticks.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < ticks.size(); ++k) series[k] = ticks[k].vehicles[i].v;
    out[i] = count_stops_series(series, dt);
  }
  return out;
}

// Speed that still allows a comfortable stop at the line.
inline double stop_envelope(double distance, double comfort_decel, double margin) {
  return std::sqrt(2.0 * comfort_decel * std::max(0.0, distance - margin));
}

// Speed cap that keeps a vehicle able to match its physical predecessor's
// speed within the available gap at the given braking authority.
inline double safe_approach_speed(double v_predecessor, double gap, double decel,
                                  double min_gap) {
  return v_predecessor + std::sqrt(2.0 * decel * std::max(0.0, gap - min_gap));
}

namespace detail {

struct VehicleRt {
  VehicleState state;
  double pos = 0;  // unwrapped front-bumper arc position [m]
  FuelAccumulator fuel;
  CaccState cacc;
  ControlInput cmd;
  double rate = 0;
  bool stopping = false;  // committed to a stop at the next stop line
};

struct PlatoonRt {
  int id = 0;
  std::vector<int> members;  // vehicle indices, leader first
  double v_ref = 0;
  double last_signal_arc = -1;  // stop line the current v_ref was planned for
  ConsensusState consensus;
  MpcController mpc;
  // last logged advisory fields, for change-only event logging
  bool has_logged = false;
  AdvisoryReason logged_reason = AdvisoryReason::Whole;
  double logged_v_ref = -1;
  std::size_t logged_front = 0;
  bool logged_pending = false;
};

inline PlatoonSnapshot snapshot_of(const PlatoonRt& p, const std::vector<VehicleRt>& veh,
                                   const std::vector<double>& gap, const Route& route) {
  PlatoonSnapshot snap;
  snap.members.reserve(p.members.size());
  for (std::size_t k = 0; k < p.members.size(); ++k) {
    const int i = p.members[k];
    snap.members.push_back({i, route.wrap(veh[i].pos), veh[i].state.v,
                            veh[i].state.length, k == 0 ? 0.0 : gap[i]});
  }
  return snap;
}

}  // namespace detail

inline RunResult run(const ScenarioConfig& cfg) {
  cfg.validate();
  const Route route = cfg.build_route();
  const std::vector<SignalController> controllers = cfg.build_signals();
  const double L = route.length();
  const double dt = cfg.dt;
  const int n = cfg.vehicle_count;
  const VehicleParams& params = cfg.vehicle;
  auto heading_fn = [&route](double s) { return route.heading_at(s); };

  RunResult out;
  out.summary.mode = to_string(cfg.mode);

  auto log_event = [&out](const nlohmann::json& j) { out.events.push_back(j.dump()); };

  // Spawn at standstill gaps behind the leader at arc 0.
  std::vector<detail::VehicleRt> veh(n);
  for (int i = 0; i < n; ++i) {
    veh[i].pos = -i * (params.length + cfg.spawn_gap);
    const double arc = route.wrap(veh[i].pos);
    const auto [x, y] = point_at_arc(route, arc);
    veh[i].state.x = x;
    veh[i].state.y = y;
    veh[i].state.yaw = route.heading_at(arc);
    veh[i].state.v = 0;
    veh[i].state.cte = 0;
    veh[i].state.yaw_err = 0;
    veh[i].state.arc_s = arc;
    veh[i].state.length = params.length;
  }

  std::vector<detail::PlatoonRt> platoons;
  std::vector<int> platoon_of(n, 0);
  int next_platoon_id = 0;
  if (cfg.mode == Mode::Advisory) {
    detail::PlatoonRt p;
    p.id = next_platoon_id++;
    for (int i = 0; i < n; ++i) p.members.push_back(i);
    p.v_ref = cfg.advisory.v_limit;
    p.last_signal_arc = route.next_signal_ahead(route.wrap(veh[0].pos)).arc_s;
    p.mpc = MpcController(cfg.mpc);
    platoons.push_back(std::move(p));
  } else {
    for (int i = 0; i < n; ++i) {
      detail::PlatoonRt p;
      p.id = next_platoon_id++;
      p.members = {i};
      p.v_ref = cfg.advisory.v_limit;
      platoons.push_back(std::move(p));
      platoon_of[i] = i;
    }
  }

  log_event({{"event", "run-start"}, {"mode", out.summary.mode}, {"vehicles", n},
             {"laps", cfg.laps}});

  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  const double target_pos = cfg.laps * L;
  const long max_ticks = static_cast<long>(std::ceil(cfg.max_sim_time / dt));
  double end_time = 0;

  for (long tick = 0; tick < max_ticks; ++tick) {
    const double t = tick * dt;

    // (1) signal phases
    std::vector<SignalTick> signal_ticks(controllers.size());
    for (std::size_t k = 0; k < controllers.size(); ++k) {
      const auto [ph, rem] = controllers[k].phase_at(t);
      signal_ticks[k] = {ph, rem};
    }

    // bumper-to-bumper gaps along the (never reordered) spawn order
    for (int i = 1; i < n; ++i)
      gap[i] = (veh[i - 1].pos - params.length) - veh[i].pos;

    bool collided = false;
    for (int i = 1; i < n; ++i) {
      if (gap[i] <= 0) {
        out.summary.collision = true;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "collision: vehicle %d hit vehicle %d at t=%.1f s (gap %.3f m)", i,
                      i - 1, t, gap[i]);
        out.summary.collision_report = buf;
        log_event({{"event", "collision"}, {"t", t}, {"vehicle", i}, {"gap", gap[i]}});
        collided = true;
        break;
      }
    }
    if (collided) {
      end_time = t;
      break;
    }

    // Committed stop-at-the-line state machine: engage while the condition
    // holds and a comfortable stop is still possible, keep braking until the
    // condition clears (green / feasible window / line crossed), and track
    // the exact stopping parabola so the vehicle halts at the margin.
    auto stop_guard = [&](int i, double d_tl, bool condition) -> bool {
      auto& r = veh[i];
      if (r.stopping) {
        if (!condition) r.stopping = false;
        return r.stopping;
      }
      if (condition && d_tl <= cfg.baseline.sight_range) {
        const double v = r.state.v;
        const double required =
            v * v / (2.0 * std::max(d_tl - cfg.baseline.stop_margin, 0.3));
        if (required <= cfg.baseline.max_decel) r.stopping = true;
      }
      return r.stopping;
    };
    // Brake target: the stop line, or the rear of a queued predecessor if
    // that is nearer.
    auto brake_distance = [&](int i, double d_tl) -> double {
      double d = d_tl;
      if (i > 0) d = std::min(d, gap[i] - 3.0 + cfg.baseline.stop_margin);
      return d;
    };
    auto brake_cmd = [&](int i, double d_tl) -> double {
      const double v = veh[i].state.v;
      if (v < 0.05) return 0.0;
      const double d = brake_distance(i, d_tl);
      const double required =
          v * v / (2.0 * std::max(d - cfg.baseline.stop_margin, 0.3));
      return std::max(-std::min(cfg.baseline.max_decel, std::max(required, 0.3)),
                      params.u_min);
    };

    // (2)-(4) per-platoon control
    std::vector<std::pair<std::size_t, AdvisoryDecision>> pending_splits;
    if (cfg.mode == Mode::Advisory) {
      for (std::size_t pi = 0; pi < platoons.size(); ++pi) {
        auto& p = platoons[pi];
        const int leader = p.members[0];
        const double leader_arc = route.wrap(veh[leader].pos);
        const SignalPost& sig = route.next_signal_ahead(leader_arc);
        const double d_tl = std::max(route.distance_to_signal(leader_arc, sig.id), 0.5);

        std::size_t sig_idx = 0;
        for (std::size_t k = 0; k < controllers.size(); ++k)
          if (controllers[k].signal_id == sig.id) sig_idx = k;

        // Target the first window the platoon can actually reach: when even
        // the speed limit cannot make the imminent green, roll the fixed
        // cycle forward so the advisory paces toward the following one
        // instead of racing at an unmakeable light.
        std::optional<GreenWindow> window;
        if (in_dsrc_range(leader_arc, sig.arc_s, L, cfg.dsrc_range)) {
          GreenWindow w = next_green_window(controllers[sig_idx].spat_at(t), t);
          const double period = controllers[sig_idx].period();
          for (int roll = 0; roll < 3; ++roll) {
            if (get_feasible_velocities(d_tl, w, t, cfg.advisory).feasible) break;
            w.t_start += period;
            w.t_end += period;
          }
          window = w;
        }

        // crossing a stop line starts a fresh approach: the held reference
        // returns to cruise until the next window constrains it
        if (p.last_signal_arc != sig.arc_s) {
          p.last_signal_arc = sig.arc_s;
          p.v_ref = cfg.advisory.v_limit;
        }
        // a leader released from a standstill into an open window departs
        // at the cruise reference rather than creeping at its stop speed
        if (veh[leader].state.v < 0.5 && window && window->t_start - t <= 0 &&
            d_tl / cfg.advisory.v_limit <= window->t_end - t)
          p.v_ref = cfg.advisory.v_limit;

        const PlatoonSnapshot snap = detail::snapshot_of(p, veh, gap, route);
        auto [decision, consensus] =
            coordinate(snap, d_tl, window, p.v_ref, t, cfg.advisory, p.consensus);
        p.consensus = consensus;
        p.v_ref = decision.v_ref;

        if (!p.has_logged || p.logged_reason != decision.reason ||
            std::abs(p.logged_v_ref - decision.v_ref) > 1e-6 ||
            p.logged_front != decision.front.size() ||
            p.logged_pending != decision.pending_consensus) {
          log_event({{"event", "advisory"}, {"t", t}, {"platoon", p.id},
                     {"leader", leader}, {"v_ref", decision.v_ref},
                     {"front", decision.front}, {"rear", decision.rear},
                     {"reason", to_string(decision.reason)},
                     {"pending", decision.pending_consensus}});
          p.has_logged = true;
          p.logged_reason = decision.reason;
          p.logged_v_ref = decision.v_ref;
          p.logged_front = decision.front.size();
          p.logged_pending = decision.pending_consensus;
        }

        // red-light guard: the leader must stop when even the slowest useful
        // approach arrives before the window opens, or the window cannot be
        // reached at the limit (or a non-green is visible without SPaT)
        bool unavoidable = false;
        if (window) {
          const double rel_s = window->t_start - t;
          const double rel_e = window->t_end - t;
          unavoidable = (d_tl / cfg.advisory.v_floor < rel_s) ||
                        (d_tl / cfg.advisory.v_limit > rel_e);
        } else {
          unavoidable = d_tl <= cfg.baseline.sight_range &&
                        signal_ticks[sig_idx].phase != Phase::Green;
        }

        if (stop_guard(leader, d_tl, unavoidable)) {
          veh[leader].cmd = {brake_cmd(leader, d_tl),
                             pure_pursuit_steer(veh[leader].state, route, params)};
        } else {
          // keep a safe approach toward whatever physically precedes the leader
          double v_cmd = decision.v_ref;
          if (leader > 0)
            v_cmd = std::min(v_cmd, safe_approach_speed(veh[leader - 1].state.v,
                                                        gap[leader],
                                                        cfg.baseline.max_decel, 3.0));
          MpcSolution sol = p.mpc.solve(veh[leader].state,
                                        std::clamp(v_cmd, params.v_min, params.v_max),
                                        route, params);
          veh[leader].cmd = sol.controls.front();
        }

        for (std::size_t k = 1; k < p.members.size(); ++k) {
          const int i = p.members[k];
          const int prec = p.members[k - 1];
          const double vt = target_velocity(veh[prec].state.v, veh[leader].state.v,
                                            gap[i], veh[i].state.v, cfg.cacc,
                                            params.v_max);
          auto [u, cs] = pid_accel(vt, veh[i].state.v, veh[i].cacc, dt, cfg.cacc, params);
          veh[i].cacc = cs;
          veh[i].cmd = {u, pure_pursuit_steer(veh[i].state, route, params)};
        }

        if (decision.is_published_split()) pending_splits.emplace_back(pi, decision);
      }
    } else {
      // baseline: independent drivers aiming for the limit, reacting to the
      // visible phase, and keeping a CACC gap to the vehicle ahead
      for (int i = 0; i < n; ++i) {
        const double arc = route.wrap(veh[i].pos);
        const SignalPost& sig = route.next_signal_ahead(arc);
        const double d_tl = route.distance_to_signal(arc, sig.id);
        std::size_t sig_idx = 0;
        for (std::size_t k = 0; k < controllers.size(); ++k)
          if (controllers[k].signal_id == sig.id) sig_idx = k;
        const bool nongreen = d_tl <= cfg.baseline.sight_range &&
                              signal_ticks[sig_idx].phase != Phase::Green;
        if (stop_guard(i, d_tl, nongreen)) {
          veh[i].cmd = {brake_cmd(i, d_tl),
                        pure_pursuit_steer(veh[i].state, route, params)};
          continue;
        }
        double v_cmd = cfg.advisory.v_limit;
        if (i > 0) {
          const double vt = target_velocity(veh[i - 1].state.v, veh[i - 1].state.v,
                                            gap[i], veh[i].state.v, cfg.cacc,
                                            params.v_max);
          v_cmd = std::min(v_cmd, vt);
        }
        auto [u, cs] = pid_accel(v_cmd, veh[i].state.v, veh[i].cacc, dt, cfg.cacc, params);
        veh[i].cacc = cs;
        veh[i].cmd = {u, pure_pursuit_steer(veh[i].state, route, params)};
      }
    }

    // emergency collision-avoidance envelope: if matching the predecessor's
    // speed within the remaining gap needs near-maximum braking, brake now
    // with the full actuator authority
    for (int i = 1; i < n; ++i) {
      const double v = veh[i].state.v;
      const double vp = veh[i - 1].state.v;
      if (v <= vp) continue;
      const double d_avail = std::max(gap[i] - 2.0, 0.05);
      const double req = (v * v - vp * vp) / (2.0 * d_avail);
      if (req >= 0.8 * cfg.baseline.max_decel)
        veh[i].cmd.u = std::min(veh[i].cmd.u, std::max(-1.2 * req, params.u_min));
    }

    // (6) fuel at the pre-step speed and the command applied over this tick
    for (int i = 0; i < n; ++i) {
      const double v = veh[i].state.v;
      const double a_net = net_acceleration(v, veh[i].cmd.u, params);
      veh[i].rate = fuel_rate(v, a_net, veh[i].cmd.u, cfg.fuel);
      veh[i].fuel = accumulate(veh[i].fuel, veh[i].rate, dt);
    }

    // capture the tick's kinematic row before stepping
    TickRecord rec;
    rec.t = t;
    rec.vehicles.reserve(n);
    for (int i = 0; i < n; ++i)
      rec.vehicles.push_back({route.wrap(veh[i].pos), veh[i].state.x, veh[i].state.y,
                              veh[i].state.v, veh[i].cmd.u, veh[i].cmd.steer, veh[i].rate,
                              veh[i].fuel.cumulative, 0});
    rec.signals = signal_ticks;

    // (5) step dynamics; projection is the ground truth for cte/yaw_err/arc
    for (int i = 0; i < n; ++i) {
      VehicleState next = step(veh[i].state, veh[i].cmd, dt, params, heading_fn, L);
      const Route::Projection proj = route.project(next.x, next.y);
      double delta = proj.arc_s - veh[i].state.arc_s;
      if (delta < -L / 2) delta += L;
      if (delta > L / 2) delta -= L;
      veh[i].pos += delta;
      next.arc_s = proj.arc_s;
      next.cte = proj.cte;
      next.yaw_err = wrap_angle(next.yaw - proj.heading);
      veh[i].state = next;
    }

    // (7) execute consensus-confirmed splits: the rear subgroup becomes its
    // own platoon, its first vehicle promoted to an MPC leader that holds
    // its current velocity until SPaT is in range
    for (auto& [pi, decision] : pending_splits) {
      auto& p = platoons[pi];
      detail::PlatoonRt rear;
      rear.id = next_platoon_id++;
      for (int id : decision.rear) rear.members.push_back(id);
      p.members.resize(decision.front.size());
      rear.v_ref = veh[rear.members[0]].state.v;
      rear.mpc = MpcController(cfg.mpc);
      p.consensus.reset();

      PlatoonAwarenessMessage pam;
      pam.leader_id = p.members[0];
      pam.platoon_size = static_cast<int>(p.members.size());
      pam.platoon_length =
          detail::snapshot_of(p, veh, gap, route).total_length();
      pam.predicted_arrival_time = 0;
      pam.split_decision = {{decision.front, decision.rear}};
      pam.timestamp = t;
      nlohmann::json pam_json;
      to_json(pam_json, pam);
      log_event({{"event", "split"}, {"t", t}, {"platoon", p.id},
                 {"new_platoon", rear.id}, {"front", decision.front},
                 {"rear", decision.rear}, {"v_ref", decision.v_ref},
                 {"pam", pam_json}});
      out.splits.push_back({t, p.id, rear.id, decision.front, decision.rear,
                            decision.v_ref});

      for (int id : rear.members) platoon_of[id] = static_cast<int>(platoons.size());
      platoons.push_back(std::move(rear));
    }

    // partition sanity: every vehicle in exactly one platoon, order intact
    std::size_t member_total = 0;
    for (const auto& p : platoons) member_total += p.members.size();
    if (member_total != static_cast<std::size_t>(n))
      throw std::logic_error("engine: platoon registry lost the partition property");

    // (8) record, with the registry state after any split this tick
    for (int i = 0; i < n; ++i)
      rec.vehicles[i].platoon_id = platoons[platoon_of[i]].id;
    out.ticks.push_back(std::move(rec));

    end_time = t + dt;
    if (veh[0].pos >= target_pos) break;
  }

  out.summary.travel_time = end_time;
  out.summary.per_vehicle_fuel.reserve(n);
  for (int i = 0; i < n; ++i)
    out.summary.per_vehicle_fuel.push_back(veh[i].fuel.cumulative);
  out.summary.leader_fuel = veh[0].fuel.cumulative;
  double total = 0;
  for (double f : out.summary.per_vehicle_fuel) total += f;
  out.summary.total_fuel = total;
  out.summary.per_vehicle_stops = count_stops(out.ticks, dt);
  out.summary.split_count = static_cast<int>(out.splits.size());
  for (const auto& s : out.splits) out.summary.split_times.push_back(s.t);
  out.summary.laps_completed = static_cast<int>(std::floor(veh[0].pos / L));

  log_event({{"event", "run-end"}, {"t", end_time},
             {"laps", out.summary.laps_completed},
             {"collision", out.summary.collision}});
  return out;
}

}  // namespace ecoplatoon
