#pragma once

// Kinematic bicycle model with aerodynamic drag and rolling resistance.
// The same forward-Euler step drives the simulation plant and the MPC's
// internal prediction rollouts.

#include <cmath>
#include <stdexcept>

#include "ecoplatoon/world.hpp"

namespace ecoplatoon {

struct VehicleParams {
  double cog_to_front_axle = 2.67;  // [m]
  double drag_coeff = 0.3;
  double air_density = 1.225;       // [kg/m^3]
  double frontal_area = 2.2;        // [m^2]
  double mass = 1500.0;             // [kg]
  double rolling_resistance = 0.01;
  double gravity = 9.81;            // [m/s^2]
  double u_min = -5.0;              // traction/brake force per unit mass [m/s^2]
  double u_max = 3.0;
  double steer_min = -0.436;        // [rad]
  double steer_max = 0.436;
  double v_min = 0.0;               // [m/s]
  double v_max = 13.89;             // 50 km/h
  double length = 4.5;              // bumper to bumper [m]

  void validate() const {
    if (cog_to_front_axle <= 0 || drag_coeff <= 0 || air_density <= 0 ||
        frontal_area <= 0 || mass <= 0 || rolling_resistance <= 0 ||
        gravity <= 0 || length <= 0)
      throw std::invalid_argument("vehicle: physical parameters must be > 0");
    if (v_min < 0) throw std::invalid_argument("vehicle: v_min must be >= 0");
    if (u_min >= u_max || steer_min >= steer_max || v_min >= v_max)
      throw std::invalid_argument("vehicle: bounds must be ordered");
  }

  // quadratic drag coefficient per unit mass: a_drag = -drag_factor * v^2
  double drag_factor() const {
    return 0.5 * drag_coeff * air_density * frontal_area / mass;
  }
};

struct ControlInput {
  double u = 0;      // traction or braking force per unit mass [m/s^2]
  double steer = 0;  // front steering angle [rad]
};

struct VehicleState {
  double x = 0;
  double y = 0;
  double yaw = 0;      // [rad], normalized to (-pi, pi]
  double v = 0;        // [m/s]
  double cte = 0;      // cross-track error [m], positive = left of path
  double yaw_err = 0;  // heading error vs. path tangent [rad]
  double arc_s = 0;    // arc position along the route [m]
  double length = 4.5; // [m]
};

// Net longitudinal acceleration: commanded force per unit mass minus
// aerodynamic drag and rolling resistance.
inline double net_acceleration(double v, double u, const VehicleParams& p) {
  return u - p.drag_factor() * v * v - p.rolling_resistance * p.gravity;
}

// One forward-Euler step. When a path heading function is supplied the
// heading error is re-anchored against the path tangent at the current arc
// position (the tracking-error form used by the MPC); otherwise the pure
// incremental update applies. Speed is clamped at zero after the update.
template <typename PathHeadingFn>
inline VehicleState step(const VehicleState& s, const ControlInput& in, double dt,
                         const VehicleParams& p, PathHeadingFn&& path_heading,
                         double route_length) {
  if (dt <= 0) throw std::invalid_argument("step: dt must be > 0");
  VehicleState n = s;
  const double yaw_rate = s.v * in.steer / p.cog_to_front_axle;
  n.x = s.x + s.v * std::cos(s.yaw) * dt;
  n.y = s.y + s.v * std::sin(s.yaw) * dt;
  n.yaw = wrap_angle(s.yaw + yaw_rate * dt);
  n.v = std::max(0.0, s.v + net_acceleration(s.v, in.u, p) * dt);
  n.cte = s.cte + s.v * std::sin(s.yaw_err) * dt;
  n.yaw_err = wrap_angle(s.yaw - path_heading(s.arc_s)) + yaw_rate * dt;
  n.arc_s = s.arc_s + s.v * std::cos(s.yaw_err) * dt;
  if (route_length > 0) {
    n.arc_s = std::fmod(n.arc_s, route_length);
    if (n.arc_s < 0) n.arc_s += route_length;
  }
  return n;
}

// Step without a reference path: heading error integrates Eq.-style
// incrementally and arc position advances with speed.
inline VehicleState step(const VehicleState& s, const ControlInput& in, double dt,
                         const VehicleParams& p) {
  if (dt <= 0) throw std::invalid_argument("step: dt must be > 0");
  VehicleState n = s;
  const double yaw_rate = s.v * in.steer / p.cog_to_front_axle;
  n.x = s.x + s.v * std::cos(s.yaw) * dt;
  n.y = s.y + s.v * std::sin(s.yaw) * dt;
  n.yaw = wrap_angle(s.yaw + yaw_rate * dt);
  n.v = std::max(0.0, s.v + net_acceleration(s.v, in.u, p) * dt);
  n.cte = s.cte + s.v * std::sin(s.yaw_err) * dt;
  n.yaw_err = s.yaw_err + yaw_rate * dt;
  n.arc_s = s.arc_s + s.v * std::cos(s.yaw_err) * dt;
  return n;
}

}  // namespace ecoplatoon
