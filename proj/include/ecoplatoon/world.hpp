#pragma once

// Route geometry and fixed-time signal controllers. The route is a closed
// polyline parameterized by arc length; the default scenario uses a circle
// of 800 m circumference with three signals and three named corridors.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecoplatoon/messages.hpp"

namespace ecoplatoon {

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

struct Waypoint {
  double x = 0;
  double y = 0;
  double arc_s = 0;
};

struct Corridor {
  std::string name;
  double start_s = 0;
  double end_s = 0;
};

struct SignalPost {
  std::string id;
  double arc_s = 0;  // stop line position
};

class Route {
 public:
  struct Projection {
    double arc_s = 0;    // arc length of closest path point
    double cte = 0;      // signed lateral offset, positive = left of travel
    double heading = 0;  // path tangent heading at the projection
  };

  Route() = default;

  static Route from_waypoints(std::vector<Waypoint> pts, double length,
                              std::vector<Corridor> corridors,
                              std::vector<SignalPost> signals) {
    Route r;
    r.length_ = length;
    r.waypoints_ = std::move(pts);
    r.corridors_ = std::move(corridors);
    r.signals_ = std::move(signals);
    r.validate_and_build();
    return r;
  }

  // Circle of the given circumference starting at the origin heading +x,
  // turning left (counterclockwise). Corridor bounds and signal placement
  // follow the default three-light corridor layout.
  static Route circle(double circumference = 800.0, double spacing = 1.0,
                      std::vector<Corridor> corridors = default_corridors(),
                      std::vector<SignalPost> signals = default_signals()) {
    if (circumference <= 0 || spacing <= 0)
      throw std::invalid_argument("route: circumference and spacing must be > 0");
    const double radius = circumference / (2.0 * std::numbers::pi);
    const int n = std::max(8, static_cast<int>(std::llround(circumference / spacing)));
    std::vector<Waypoint> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double s = circumference * i / n;
      const double phi = s / radius;
      pts.push_back({radius * std::sin(phi), radius * (1.0 - std::cos(phi)), s});
    }
    return from_waypoints(std::move(pts), circumference, std::move(corridors),
                          std::move(signals));
  }

  static std::vector<Corridor> default_corridors() {
    return {{"corridor3", 0, 220}, {"corridor1", 220, 420},
            {"corridor2", 420, 580}, {"corridor3", 580, 800}};
  }

  static std::vector<SignalPost> default_signals() {
    return {{"tl1", 220}, {"tl2", 420}, {"tl3", 580}};
  }

  double length() const { return length_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  const std::vector<Corridor>& corridors() const { return corridors_; }
  const std::vector<SignalPost>& signals() const { return signals_; }

  double wrap(double s) const {
    double r = std::fmod(s, length_);
    if (r < 0) r += length_;
    return r;
  }

  // Nearest path point to (x, y) over all closed-polyline segments.
  Projection project(double x, double y) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    Projection best;
    const std::size_t n = waypoints_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Waypoint& a = waypoints_[i];
      const Waypoint& b = waypoints_[(i + 1) % n];
      const double ex = b.x - a.x, ey = b.y - a.y;
      const double seg_len2 = ex * ex + ey * ey;
      double t = ((x - a.x) * ex + (y - a.y) * ey) / seg_len2;
      t = std::clamp(t, 0.0, 1.0);
      const double px = a.x + t * ex, py = a.y + t * ey;
      const double dx = x - px, dy = y - py;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best.arc_s = wrap(a.arc_s + t * seg_lengths_[i]);
        // signed offset: dot with the left normal of the segment direction
        const double inv = 1.0 / std::sqrt(seg_len2);
        best.cte = (-ey * dx + ex * dy) * inv;
      }
    }
    best.heading = heading_at(best.arc_s);
    return best;
  }

  // Path tangent heading, linearly interpolated in arc length between
  // waypoint tangents (exact for uniformly sampled circles).
  double heading_at(double s) const {
    const auto [i, t] = locate(wrap(s));
    return wrap_angle(theta_[i] + t * (theta_[i + 1] - theta_[i]));
  }

  // d(heading)/ds on the containing segment.
  double curvature_at(double s) const {
    const auto [i, t] = locate(wrap(s));
    (void)t;
    return (theta_[i + 1] - theta_[i]) / seg_lengths_[i];
  }

  // Forward arc distance from arc_s to the signal's stop line, in [0, length).
  double distance_to_signal(double arc_s, const std::string& signal_id) const {
    for (const auto& sig : signals_) {
      if (sig.id == signal_id) {
        double d = std::fmod(sig.arc_s - arc_s, length_);
        if (d < 0) d += length_;
        return d;
      }
    }
    throw std::invalid_argument("route: unknown signal id: " + signal_id);
  }

  // Signal with the smallest forward distance from arc_s.
  const SignalPost& next_signal_ahead(double arc_s) const {
    if (signals_.empty()) throw std::logic_error("route: no signals");
    const SignalPost* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& sig : signals_) {
      const double d = distance_to_signal(arc_s, sig.id);
      if (d < best_d) {
        best_d = d;
        best = &sig;
      }
    }
    return *best;
  }

  const std::string& corridor_name_at(double s) const {
    const double ws = wrap(s);
    for (const auto& c : corridors_)
      if (ws >= c.start_s && ws < c.end_s) return c.name;
    throw std::logic_error("route: corridors do not cover arc position");
  }

 private:
  void validate_and_build() {
    if (length_ <= 0) throw std::invalid_argument("route: length must be > 0");
    if (waypoints_.size() < 3)
      throw std::invalid_argument("route: need at least 3 waypoints");
    for (std::size_t i = 1; i < waypoints_.size(); ++i)
      if (waypoints_[i].arc_s <= waypoints_[i - 1].arc_s)
        throw std::invalid_argument("route: waypoint arc_s must be strictly increasing");
    if (waypoints_.back().arc_s >= length_)
      throw std::invalid_argument("route: waypoint arc_s must stay below route length");
    if (!corridors_.empty()) {
      double cursor = 0;
      for (const auto& c : corridors_) {
        if (std::abs(c.start_s - cursor) > 1e-9)
          throw std::invalid_argument("route: corridors must partition [0, length)");
        if (c.end_s <= c.start_s)
          throw std::invalid_argument("route: corridor bounds must be increasing");
        cursor = c.end_s;
      }
      if (std::abs(cursor - length_) > 1e-9)
        throw std::invalid_argument("route: corridors must end at route length");
    }
    for (const auto& sig : signals_)
      if (sig.arc_s < 0 || sig.arc_s >= length_)
        throw std::invalid_argument("route: signal position outside [0, length)");

    const std::size_t n = waypoints_.size();
    seg_lengths_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double next_s =
          (i + 1 < n) ? waypoints_[i + 1].arc_s : length_ + waypoints_[0].arc_s;
      seg_lengths_[i] = next_s - waypoints_[i].arc_s;
    }

    // Waypoint tangents from central differences, unwrapped cumulatively so
    // interpolation never crosses an angle seam; theta_[n] closes the loop.
    theta_.resize(n + 1);
    double prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Waypoint& before = waypoints_[(i + n - 1) % n];
      const Waypoint& after = waypoints_[(i + 1) % n];
      const double raw = std::atan2(after.y - before.y, after.x - before.x);
      theta_[i] = (i == 0) ? raw : prev + wrap_angle(raw - prev);
      prev = theta_[i];
    }
    theta_[n] = prev + wrap_angle(theta_[0] - prev);
    // A simple closed loop turns by a full revolution.
    const double total_turn = theta_[n] - theta_[0];
    if (std::abs(std::abs(total_turn) - 2.0 * std::numbers::pi) > 0.5)
      theta_[n] = theta_[0] + (total_turn >= 0 ? 1.0 : -1.0) * 2.0 * std::numbers::pi;
  }

  // Segment index and fractional position for a wrapped arc position.
  std::pair<std::size_t, double> locate(double ws) const {
    auto it = std::upper_bound(
        waypoints_.begin(), waypoints_.end(), ws,
        [](double v, const Waypoint& w) { return v < w.arc_s; });
    const std::size_t i = (it == waypoints_.begin())
                              ? waypoints_.size() - 1
                              : static_cast<std::size_t>(it - waypoints_.begin()) - 1;
    double local = ws - waypoints_[i].arc_s;
    if (local < 0) local += length_;
    return {i, local / seg_lengths_[i]};
  }

  double length_ = 0;
  std::vector<Waypoint> waypoints_;
  std::vector<Corridor> corridors_;
  std::vector<SignalPost> signals_;
  std::vector<double> seg_lengths_;
  std::vector<double> theta_;  // unwrapped waypoint tangents, size n+1
};

// Fixed-time signal: the cycle plan starts (first entry) at t = phase_offset
// and repeats with the plan period.
struct SignalController {
  std::string signal_id;
  CyclePlan cycle_plan;
  double phase_offset = 0;

  double period() const { return cycle_period(cycle_plan); }

  void validate() const {
    if (cycle_plan.empty())
      throw std::invalid_argument("signal: cycle_plan must not be empty");
    for (const auto& [ph, d] : cycle_plan)
      if (d <= 0) throw std::invalid_argument("signal: cycle durations must be > 0");
    bool has_green = false;
    for (const auto& [ph, d] : cycle_plan) has_green |= (ph == Phase::Green);
    if (!has_green)
      throw std::invalid_argument("signal: cycle_plan contains no green phase");
    if (phase_offset < 0 || phase_offset >= period())
      throw std::invalid_argument("signal: phase_offset must be in [0, period)");
  }

  std::pair<Phase, double> phase_at(double t) const {
    const double p = period();
    double tau = std::fmod(t - phase_offset, p);
    if (tau < 0) tau += p;
    double acc = 0;
    for (const auto& [ph, d] : cycle_plan) {
      if (tau < acc + d) return {ph, acc + d - tau};
      acc += d;
    }
    // fmod guarantees tau < p; guard against rounding at the boundary
    return {cycle_plan.front().first, cycle_plan.front().second};
  }

  SpatMessage spat_at(double t) const {
    const auto [ph, remaining] = phase_at(t);
    return SpatMessage{signal_id, ph, remaining, cycle_plan, t};
  }
};

}  // namespace ecoplatoon
