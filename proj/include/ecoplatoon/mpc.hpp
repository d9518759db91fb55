#pragma once

// Nonlinear MPC for platoon leaders. Single shooting: the decision vector
// is the control sequence, dynamics hold by construction through rollout,
// and box bounds on the controls are enforced by projection. The solver is
// projected gradient descent with Armijo backtracking and an analytic
// adjoint gradient through the rollout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ecoplatoon/dynamics.hpp"
#include "ecoplatoon/world.hpp"

namespace ecoplatoon {

struct MpcConfig {
  int horizon = 20;       // number of predicted states N (N-1 controls)
  double dt = 0.25;       // prediction step [s]; N * dt = 5 s by default
  double w_cte = 2.0;
  double w_yaw_err = 2.0;
  double w_v = 1.0;
  double w_dsteer = 100.0;
  double w_du = 10.0;
  double w_accel_pos = 0.5;  // asymmetric penalty on positive (fuel) accel
  double w_vmax = 50.0;      // soft penalty above the speed bound
  int max_iterations = 120;
  double tolerance = 1e-8;   // stop when steps improve relative cost by less

  void validate() const {
    if (horizon < 2) throw std::invalid_argument("mpc: horizon must be >= 2");
    if (dt <= 0) throw std::invalid_argument("mpc: dt must be > 0");
    for (double w : {w_cte, w_yaw_err, w_v, w_dsteer, w_du, w_accel_pos, w_vmax})
      if (w < 0) throw std::invalid_argument("mpc: weights must be >= 0");
    if (max_iterations < 1) throw std::invalid_argument("mpc: max_iterations must be >= 1");
    if (tolerance <= 0) throw std::invalid_argument("mpc: tolerance must be > 0");
  }
};

struct MpcSolution {
  std::vector<ControlInput> controls;          // length N-1
  std::vector<VehicleState> predicted_states;  // length N
  double cost = 0;
  bool converged = false;
  int iterations = 0;
};

// Stage costs summed over the horizon: tracking (cte, heading error),
// velocity reference, actuator smoothness over consecutive controls, the
// asymmetric positive-acceleration penalty, and a soft speed-bound term
// when v_max is finite.
inline double evaluate_cost(const std::vector<VehicleState>& states,
                            const std::vector<ControlInput>& controls,
                            double v_ref, const MpcConfig& cfg,
                            double v_max = std::numeric_limits<double>::infinity()) {
  if (states.size() != controls.size() + 1)
    throw std::invalid_argument("evaluate_cost: need |states| = |controls| + 1");
  double j = 0;
  for (const auto& s : states) {
    j += cfg.w_cte * s.cte * s.cte;
    j += cfg.w_yaw_err * s.yaw_err * s.yaw_err;
    const double dv = v_ref - s.v;
    j += cfg.w_v * dv * dv;
    if (s.v > v_max) {
      const double over = s.v - v_max;
      j += cfg.w_vmax * over * over;
    }
  }
  for (std::size_t t = 0; t + 1 < controls.size(); ++t) {
    const double dd = controls[t + 1].steer - controls[t].steer;
    const double du = controls[t + 1].u - controls[t].u;
    j += cfg.w_dsteer * dd * dd + cfg.w_du * du * du;
  }
  for (const auto& c : controls) {
    if (c.u > 0) j += cfg.w_accel_pos * c.u * c.u;
  }
  return j;
}

class MpcController {
 public:
  explicit MpcController(MpcConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const MpcConfig& config() const { return cfg_; }

  // Solves the horizon problem from the current state. Initializes from the
  // better of the previous solution (hold) and the zero-control sequence,
  // then descends monotonically, so the returned cost never exceeds either
  // warm start. Hitting the iteration cap returns the best found solution
  // with converged = false.
  MpcSolution solve(const VehicleState& current, double v_ref, const Route& route,
                    const VehicleParams& params) {
    for (double f : {current.x, current.y, current.yaw, current.v, current.cte,
                     current.yaw_err, current.arc_s})
      if (!std::isfinite(f)) throw std::invalid_argument("mpc: non-finite state input");
    v_ref = std::clamp(v_ref, params.v_min, params.v_max);

    const int m = cfg_.horizon - 1;  // number of controls
    std::vector<ControlInput> zero(m);
    if (static_cast<int>(warm_.size()) != m) warm_ = zero;
    clamp_controls(warm_, params);

    // Proportional speed-tracking start. The plant clamps speed at zero, so
    // from standstill the cost is locally flat in u and pure descent from a
    // zero sequence would never pull away; this candidate starts inside the
    // active region.
    std::vector<ControlInput> track(m);
    {
      double v_sim = current.v;
      for (int k = 0; k < m; ++k) {
        const double hold = params.drag_factor() * v_sim * v_sim +
                            params.rolling_resistance * params.gravity;
        track[k].u = std::clamp(hold + 0.8 * (v_ref - v_sim), params.u_min, params.u_max);
        v_sim = std::max(0.0, v_sim + net_acceleration(v_sim, track[k].u, params) * cfg_.dt);
      }
    }

    std::vector<VehicleState> states;
    const double j_warm = rollout_cost(current, warm_, v_ref, route, params, states);
    const double j_zero = rollout_cost(current, zero, v_ref, route, params, states);
    const double j_track = rollout_cost(current, track, v_ref, route, params, states);
    std::vector<ControlInput> z = (j_warm <= j_zero) ? warm_ : zero;
    double j = std::min(j_warm, j_zero);
    if (j_track < j) {
      z = track;
      j = j_track;
    }

    std::vector<double> grad(2 * static_cast<std::size_t>(m));
    std::vector<ControlInput> trial(m);
    std::vector<VehicleState> trial_states;
    MpcSolution out;
    double alpha = -1;  // set from the first gradient scale

    int iter = 0;
    int small_steps = 0;
    for (; iter < cfg_.max_iterations; ++iter) {
      rollout_cost(current, z, v_ref, route, params, states);
      gradient(states, z, v_ref, route, params, grad);
      double gmax = 0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      if (gmax < 1e-14) {
        out.converged = true;
        break;
      }
      if (alpha < 0) alpha = 1.0 / (1.0 + gmax);

      bool improved = false;
      double a = alpha;
      double accepted_a = alpha;
      double j_trial = j;
      for (int bt = 0; bt < 40; ++bt) {
        for (int k = 0; k < m; ++k) {
          trial[k].u = std::clamp(z[k].u - a * grad[2 * k], params.u_min, params.u_max);
          trial[k].steer =
              std::clamp(z[k].steer - a * grad[2 * k + 1], params.steer_min, params.steer_max);
        }
        j_trial = rollout_cost(current, trial, v_ref, route, params, trial_states);
        // projected Armijo: sufficient decrease along the feasible step
        double descent = 0;
        for (int k = 0; k < m; ++k) {
          descent += grad[2 * k] * (z[k].u - trial[k].u);
          descent += grad[2 * k + 1] * (z[k].steer - trial[k].steer);
        }
        if (j_trial <= j - 1e-4 * descent && j_trial < j) {
          improved = true;
          accepted_a = a;
          break;
        }
        a *= 0.5;
      }
      if (!improved) {
        out.converged = true;  // no descent along the projected gradient
        break;
      }
      const double decrease = j - j_trial;
      z.swap(trial);
      j = j_trial;
      alpha = std::min(accepted_a * 4.0, 1e3);
      // two consecutive negligible improvements: done (a single tiny step
      // can just be a backtracked alpha, not stationarity)
      small_steps = (decrease < cfg_.tolerance * (1.0 + std::abs(j))) ? small_steps + 1 : 0;
      if (small_steps >= 2) {
        out.converged = true;
        ++iter;
        break;
      }
    }

    rollout_cost(current, z, v_ref, route, params, states);
    out.controls = z;
    out.predicted_states = states;
    out.cost = j;
    out.iterations = iter;
    warm_ = z;
    return out;
  }

  void reset() { warm_.clear(); }

  // Rollout cost and its adjoint gradient for a given control sequence,
  // laid out [u0, steer0, u1, steer1, ...]. Exposed for diagnostics and
  // for finite-difference verification.
  double cost_and_gradient(const VehicleState& current,
                           const std::vector<ControlInput>& controls, double v_ref,
                           const Route& route, const VehicleParams& params,
                           std::vector<double>& grad_out) const {
    std::vector<VehicleState> states;
    const double j = rollout_cost(current, controls, v_ref, route, params, states);
    grad_out.assign(2 * controls.size(), 0.0);
    gradient(states, controls, v_ref, route, params, grad_out);
    return j;
  }

  double rollout(const VehicleState& current, const std::vector<ControlInput>& controls,
                 double v_ref, const Route& route, const VehicleParams& params) const {
    std::vector<VehicleState> states;
    return rollout_cost(current, controls, v_ref, route, params, states);
  }

 private:
  static void clamp_controls(std::vector<ControlInput>& cs, const VehicleParams& p) {
    for (auto& c : cs) {
      c.u = std::clamp(c.u, p.u_min, p.u_max);
      c.steer = std::clamp(c.steer, p.steer_min, p.steer_max);
    }
  }

  double rollout_cost(const VehicleState& s0, const std::vector<ControlInput>& cs,
                      double v_ref, const Route& route, const VehicleParams& params,
                      std::vector<VehicleState>& states) const {
    states.clear();
    states.reserve(cs.size() + 1);
    states.push_back(s0);
    auto heading = [&route](double s) { return route.heading_at(s); };
    for (const auto& c : cs)
      states.push_back(step(states.back(), c, cfg_.dt, params, heading, route.length()));
    return evaluate_cost(states, cs, v_ref, cfg_, params.v_max);
  }

  // Reverse-mode (adjoint) gradient of the rollout cost with respect to the
  // control sequence. The adjoint runs over (yaw, v, cte, yaw_err, arc_s);
  // x and y never feed the cost. grad is laid out [u0, steer0, u1, steer1, ...].
  void gradient(const std::vector<VehicleState>& states,
                const std::vector<ControlInput>& cs, double v_ref, const Route& route,
                const VehicleParams& params, std::vector<double>& grad) const {
    const int m = static_cast<int>(cs.size());
    std::fill(grad.begin(), grad.end(), 0.0);

    // control-only terms
    for (int t = 0; t + 1 < m; ++t) {
      const double dd = cs[t + 1].steer - cs[t].steer;
      const double du = cs[t + 1].u - cs[t].u;
      grad[2 * (t + 1) + 1] += 2.0 * cfg_.w_dsteer * dd;
      grad[2 * t + 1] -= 2.0 * cfg_.w_dsteer * dd;
      grad[2 * (t + 1)] += 2.0 * cfg_.w_du * du;
      grad[2 * t] -= 2.0 * cfg_.w_du * du;
    }
    for (int t = 0; t < m; ++t)
      if (cs[t].u > 0) grad[2 * t] += 2.0 * cfg_.w_accel_pos * cs[t].u;

    const double dt = cfg_.dt;
    const double lf = params.cog_to_front_axle;
    const double kd = params.drag_factor();

    double l_yaw = 0, l_v = 0, l_cte = 0, l_yerr = 0, l_arc = 0;
    add_state_cost_grad(states.back(), v_ref, params.v_max, l_v, l_cte, l_yerr);

    for (int k = m - 1; k >= 0; --k) {
      const VehicleState& s = states[k];
      const double u = cs[k].u;
      const double steer = cs[k].steer;
      const double sin_e = std::sin(s.yaw_err);
      const double cos_e = std::cos(s.yaw_err);
      const bool v_active = s.v + net_acceleration(s.v, u, params) * dt > 0;

      // dJ/dc_k via s_{k+1}
      grad[2 * k] += l_v * (v_active ? dt : 0.0);
      grad[2 * k + 1] += (l_yaw + l_yerr) * (s.v * dt / lf);

      // pull the adjoint back through s_{k+1} = f(s_k, c_k)
      const double n_yaw = l_yaw + l_yerr;
      const double n_v = l_yaw * (steer * dt / lf) +
                         l_v * (v_active ? 1.0 - 2.0 * kd * s.v * dt : 0.0) +
                         l_cte * (sin_e * dt) + l_yerr * (steer * dt / lf) +
                         l_arc * (cos_e * dt);
      const double n_cte = l_cte;
      const double n_yerr = l_cte * (s.v * cos_e * dt) - l_arc * (s.v * sin_e * dt);
      const double n_arc = l_arc - l_yerr * route.curvature_at(s.arc_s);

      l_yaw = n_yaw;
      l_v = n_v;
      l_cte = n_cte;
      l_yerr = n_yerr;
      l_arc = n_arc;
      add_state_cost_grad(s, v_ref, params.v_max, l_v, l_cte, l_yerr);
    }
  }

  void add_state_cost_grad(const VehicleState& s, double v_ref, double v_max,
                           double& l_v, double& l_cte, double& l_yerr) const {
    l_v += -2.0 * cfg_.w_v * (v_ref - s.v);
    if (s.v > v_max) l_v += 2.0 * cfg_.w_vmax * (s.v - v_max);
    l_cte += 2.0 * cfg_.w_cte * s.cte;
    l_yerr += 2.0 * cfg_.w_yaw_err * s.yaw_err;
  }

  MpcConfig cfg_;
  std::vector<ControlInput> warm_;
};

// Stateless convenience wrapper over a fresh controller.
inline MpcSolution solve_mpc(const VehicleState& current, double v_ref,
                             const Route& route, const VehicleParams& params,
                             const MpcConfig& cfg) {
  MpcController controller(cfg);
  return controller.solve(current, v_ref, route, params);
}

}  // namespace ecoplatoon
