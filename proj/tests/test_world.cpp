#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "ecoplatoon/world.hpp"

using namespace ecoplatoon;

namespace {
const CyclePlan kPlan = {{Phase::Green, 15}, {Phase::Amber, 3}, {Phase::Red, 20}};
}

TEST_CASE("phase_at walks the fixed cycle") {
  SignalController c{"tl1", kPlan, 0};
  c.validate();
  auto [p0, r0] = c.phase_at(0);
  CHECK(p0 == Phase::Green);
  CHECK(r0 == Catch::Approx(15.0));
  auto [p1, r1] = c.phase_at(16);
  CHECK(p1 == Phase::Amber);
  CHECK(r1 == Catch::Approx(2.0));
  auto [p2, r2] = c.phase_at(38);  // one full period
  CHECK(p2 == Phase::Green);
  CHECK(r2 == Catch::Approx(15.0));
}

TEST_CASE("phase_at respects the offset and is periodic") {
  SignalController c{"tl2", kPlan, 12};
  c.validate();
  auto [p, r] = c.phase_at(12);
  CHECK(p == Phase::Green);
  CHECK(r == Catch::Approx(15.0));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> td(0, 500);
  for (int k = 0; k < 200; ++k) {
    const double t = td(rng);
    auto [pa, ra] = c.phase_at(t);
    auto [pb, rb] = c.phase_at(t + c.period());
    CHECK(pa == pb);
    CHECK(ra == Catch::Approx(rb));
  }
}

TEST_CASE("distance_to_signal is the forward modular distance") {
  const Route route = Route::circle();
  CHECK(route.distance_to_signal(200, "tl1") == Catch::Approx(20.0));
  CHECK(route.distance_to_signal(230, "tl1") == Catch::Approx(790.0));
  CHECK(route.distance_to_signal(220, "tl1") == Catch::Approx(0.0));
  CHECK_THROWS_AS(route.distance_to_signal(0, "nope"), std::invalid_argument);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> sd(0, 800);
  for (int k = 0; k < 200; ++k) {
    const double d = route.distance_to_signal(sd(rng), "tl2");
    CHECK(d >= 0.0);
    CHECK(d < route.length());
  }
}

TEST_CASE("next_signal_ahead picks the nearest forward stop line") {
  const Route route = Route::circle();
  CHECK(route.next_signal_ahead(100).id == "tl1");
  CHECK(route.next_signal_ahead(300).id == "tl2");
  CHECK(route.next_signal_ahead(500).id == "tl3");
  CHECK(route.next_signal_ahead(700).id == "tl1");
}

TEST_CASE("projection of on-path and offset points") {
  const Route route = Route::circle();
  const double radius = 800.0 / (2.0 * std::numbers::pi);

  // a point on the path (mid-segment of the polyline) projects with zero cte
  const auto& wp = route.waypoints();
  const double mx = 0.5 * (wp[60].x + wp[61].x);
  const double my = 0.5 * (wp[60].y + wp[61].y);
  const auto on = route.project(mx, my);
  CHECK(std::abs(on.cte) < 1e-9);
  CHECK(on.arc_s == Catch::Approx(60.5).margin(0.01));

  // a point one meter outside the circle on the same ray: |cte| = 1
  const double cx = 0, cy = radius;  // circle center
  const double phi = 1.2;
  const double px = cx + (radius + 1.0) * std::sin(phi);
  const double py = cy - (radius + 1.0) * std::cos(phi);
  const auto out = route.project(px, py);
  CHECK(std::abs(out.cte) == Catch::Approx(1.0).margin(0.01));
  // travel is counterclockwise, so outside the circle is to the right
  CHECK(out.cte < 0);
}

TEST_CASE("projection round-trip against generated lateral offsets") {
  const Route route = Route::circle();
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> sd(0, 800), dd(-3, 3);
  for (int k = 0; k < 200; ++k) {
    const double s = sd(rng);
    const double d = dd(rng);
    const double heading = route.heading_at(s);
    // point at arc s with lateral offset d (positive = left of travel)
    const double radius = 800.0 / (2.0 * std::numbers::pi);
    const double phi = s / radius;
    const double bx = radius * std::sin(phi);
    const double by = radius * (1 - std::cos(phi));
    const double px = bx - d * std::sin(heading);
    const double py = by + d * std::cos(heading);
    const auto proj = route.project(px, py);
    CHECK(std::abs(proj.cte - d) < 0.02);
    double ds = std::abs(proj.arc_s - s);
    ds = std::min(ds, 800.0 - ds);
    CHECK(ds < 1.0);  // within one waypoint spacing
  }
}

TEST_CASE("projection agrees with a brute-force nearest-waypoint oracle") {
  const Route route = Route::circle();
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> xd(-150, 150), yd(-30, 280);
  for (int k = 0; k < 100; ++k) {
    const double x = xd(rng), y = yd(rng);
    const auto proj = route.project(x, y);
    double best_d2 = 1e18, best_s = 0;
    for (const auto& w : route.waypoints()) {
      const double d2 = (w.x - x) * (w.x - x) + (w.y - y) * (w.y - y);
      if (d2 < best_d2) {
        best_d2 = d2;
        best_s = w.arc_s;
      }
    }
    double ds = std::abs(proj.arc_s - best_s);
    ds = std::min(ds, 800.0 - ds);
    CHECK(ds <= 1.0);
  }
}

TEST_CASE("heading and curvature are smooth on the circle") {
  const Route route = Route::circle();
  const double radius = 800.0 / (2.0 * std::numbers::pi);
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> sd(0, 800);
  for (int k = 0; k < 200; ++k) {
    const double s = sd(rng);
    CHECK(wrap_angle(route.heading_at(s) - s / radius) == Catch::Approx(0.0).margin(1e-6));
    CHECK(route.curvature_at(s) == Catch::Approx(1.0 / radius).epsilon(1e-6));
  }
}

TEST_CASE("route validation rejects bad geometry") {
  CHECK_THROWS_AS(Route::circle(0), std::invalid_argument);
  auto corr = Route::default_corridors();
  corr[1].start_s = 100;  // breaks the partition
  CHECK_THROWS_AS(Route::circle(800, 1.0, corr), std::invalid_argument);
  auto sigs = Route::default_signals();
  sigs[0].arc_s = 900;
  CHECK_THROWS_AS(Route::circle(800, 1.0, Route::default_corridors(), sigs),
                  std::invalid_argument);
}

TEST_CASE("corridor lookup follows the configured bounds") {
  const Route route = Route::circle();
  CHECK(route.corridor_name_at(10) == "corridor3");
  CHECK(route.corridor_name_at(300) == "corridor1");
  CHECK(route.corridor_name_at(500) == "corridor2");
  CHECK(route.corridor_name_at(700) == "corridor3");
}
