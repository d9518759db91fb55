#pragma once

// Follower control: gap- and velocity-based target speed with adaptive
// gains, tracked by a gain-scheduled PID that outputs a bounded
// acceleration command. Lateral control for followers is a pure-pursuit
// law on the route.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ecoplatoon/dynamics.hpp"

namespace ecoplatoon {

struct PidBand {
  double v_from = 0;  // [m/s], inclusive
  double v_to = 0;    // exclusive (last band is inclusive at v_max)
  double kp = 0;
  double ki = 0;
  double kd = 0;
};

struct CaccConfig {
  double s_min = 10.0;   // [m]
  double s_max = 15.0;   // [m]
  double s_0 = 1.0;      // standstill gap [m]
  double t_gap = 1.0;    // time headway [s]
  double k1_min = 0.2;
  double k1_max = 0.6;
  double k2_min = 0.3;
  double k2_max = 0.7;
  std::vector<PidBand> pid_bands = {{0, 5, 1.0, 0.05, 0.0},
                                    {5, 10, 0.8, 0.05, 0.0},
                                    {10, 1e9, 0.6, 0.03, 0.0}};
  double integral_limit = 10.0;

  void validate() const {
    if (s_min > s_max) throw std::invalid_argument("cacc: s_min must be <= s_max");
    if (k1_min > k1_max || k2_min > k2_max)
      throw std::invalid_argument("cacc: gain min must be <= max");
    if (pid_bands.empty()) throw std::invalid_argument("cacc: pid_bands must not be empty");
    double cursor = 0;
    for (const auto& b : pid_bands) {
      if (std::abs(b.v_from - cursor) > 1e-9)
        throw std::invalid_argument("cacc: pid_bands must cover speeds without gaps");
      if (b.v_to <= b.v_from)
        throw std::invalid_argument("cacc: pid band bounds must be increasing");
      cursor = b.v_to;
    }
  }
};

struct CaccState {
  double integral = 0;
  double prev_error = 0;
  double prev_target = 0;
  bool has_prev_error = false;
};

// Clamped time-headway gap policy.
inline double desired_gap(double v_ego, const CaccConfig& c) {
  if (v_ego < 0) throw std::invalid_argument("desired_gap: v_ego must be >= 0");
  return std::max(c.s_min, std::min(c.s_0 + v_ego * c.t_gap, c.s_max));
}

// Exponential-saturation interpolation between the gain bounds; the
// magnitude of the gap error drives the exponent so both too-close and
// too-far deviations stiffen the response.
inline std::pair<double, double> adaptive_gains(double gap_error, const CaccConfig& c) {
  const double blend = 1.0 - std::exp(-std::abs(gap_error) / c.s_max);
  return {c.k1_min + (c.k1_max - c.k1_min) * blend,
          c.k2_min + (c.k2_max - c.k2_min) * blend};
}

// Target velocity from the predecessor speed, the gap error, and the
// leader-speed feedforward, clamped to [0, v_max].
inline double target_velocity(double v_preceding, double v_leader, double s_current,
                              double v_ego, const CaccConfig& c, double v_max) {
  const double s_des = desired_gap(v_ego, c);
  const double gap_error = s_current - s_des;
  const auto [k1, k2] = adaptive_gains(gap_error, c);
  const double v = v_preceding + k1 * gap_error + k2 * (v_leader - v_preceding);
  return std::clamp(v, 0.0, v_max);
}

inline const PidBand& pid_band_for(double v_ego, const CaccConfig& c) {
  for (const auto& b : c.pid_bands)
    if (v_ego >= b.v_from && v_ego < b.v_to) return b;
  return c.pid_bands.back();
}

// PID on the speed error with the band gains for the current ego speed.
// Output clamps to the actuator bounds; the integral is frozen while the
// output saturates and clipped to the anti-windup limit.
inline std::pair<double, CaccState> pid_accel(double v_target, double v_ego,
                                              CaccState state, double dt,
                                              const CaccConfig& c,
                                              const VehicleParams& p) {
  if (dt <= 0) throw std::invalid_argument("pid_accel: dt must be > 0");
  const PidBand& band = pid_band_for(v_ego, c);
  const double error = v_target - v_ego;
  const double derivative = state.has_prev_error ? (error - state.prev_error) / dt : 0.0;

  double integral = state.integral + error * dt;
  integral = std::clamp(integral, -c.integral_limit, c.integral_limit);

  const double raw = band.kp * error + band.ki * integral + band.kd * derivative;
  const double u = std::clamp(raw, p.u_min, p.u_max);
  if (raw > p.u_min && raw < p.u_max) state.integral = integral;

  state.prev_error = error;
  state.has_prev_error = true;
  state.prev_target = v_target;
  return {u, state};
}

// (x, y) of the route point at arc position s.
inline std::pair<double, double> point_at_arc(const Route& route, double s) {
  const auto& pts = route.waypoints();
  const double ws = route.wrap(s);
  std::size_t lo = 0, hi = pts.size();
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (pts[mid].arc_s <= ws) lo = mid;
    else hi = mid;
  }
  const auto& a = pts[lo];
  const auto& b = pts[(lo + 1) % pts.size()];
  const double seg = (lo + 1 < pts.size()) ? b.arc_s - a.arc_s : route.length() - a.arc_s;
  const double t = (seg > 0) ? (ws - a.arc_s) / seg : 0.0;
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

// Pure-pursuit steering toward a lookahead point on the route. Stable on
// the loop and independent of the longitudinal law.
inline double pure_pursuit_steer(const VehicleState& s, const Route& route,
                                 const VehicleParams& p, double lookahead_gain = 0.7,
                                 double lookahead_min = 4.0, double lookahead_max = 12.0) {
  const double ld = std::clamp(lookahead_gain * s.v, lookahead_min, lookahead_max);
  const auto [tx, ty] = point_at_arc(route, s.arc_s + ld);
  const double alpha = wrap_angle(std::atan2(ty - s.y, tx - s.x) - s.yaw);
  const double steer = std::atan2(2.0 * p.cog_to_front_axle * std::sin(alpha), ld);
  return std::clamp(steer, p.steer_min, p.steer_max);
}

}  // namespace ecoplatoon
