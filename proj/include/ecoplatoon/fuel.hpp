#pragma once

// Regression-based instantaneous fuel-rate model: cubic cruise polynomial
// plus an acceleration term, with an idle rate when standing or braking.
// All rates are in liters per second.

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecoplatoon {

struct FuelCoefficients {
  // Cruise polynomial b0 + b1 v + b2 v^2 + b3 v^3 and acceleration
  // polynomial a * (c0 + c1 v + c2 v^2), both in L/s. Defaults follow the
  // regression constants published by Kamal et al. (IEEE T-ITS 12(4), 2011)
  // for a representative passenger car, converted from mL/s.
  double b0 = 1.569e-4;
  double b1 = 2.450e-5;
  double b2 = -7.415e-7;
  double b3 = 5.975e-8;
  double c0 = 7.224e-5;
  double c1 = 9.681e-5;
  double c2 = 1.075e-6;
  double f_idle = 1.569e-4;  // stationary / braking rate [L/s]

  void validate() const {
    if (!(f_idle > 0)) throw std::invalid_argument("fuel: f_idle must be > 0");
    for (double c : {b0, b1, b2, b3, c0, c1, c2, f_idle})
      if (!std::isfinite(c)) throw std::invalid_argument("fuel: coefficients must be finite");
  }
};

// Instantaneous rate [L/s]. The idle branch applies when the vehicle is
// (nearly) stationary or the commanded force is braking; otherwise cruise
// plus acceleration terms, floored at zero.
inline double fuel_rate(double v, double a_net, double u, const FuelCoefficients& k,
                        double standstill_speed = 0.1) {
  if (v < standstill_speed || u < 0) return k.f_idle;
  const double cruise = k.b0 + v * (k.b1 + v * (k.b2 + v * k.b3));
  const double accel = a_net * (k.c0 + v * (k.c1 + v * k.c2));
  return std::max(0.0, cruise + accel);
}

struct FuelAccumulator {
  double cumulative = 0;  // [L]
  double last_rate = 0;   // [L/s]
};

inline FuelAccumulator accumulate(FuelAccumulator acc, double rate, double dt) {
  if (rate < 0) throw std::invalid_argument("accumulate: rate must be >= 0");
  if (dt <= 0) throw std::invalid_argument("accumulate: dt must be > 0");
  acc.cumulative += rate * dt;
  acc.last_rate = rate;
  return acc;
}

}  // namespace ecoplatoon
