// Copyright 2026 the cavmerge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cavmerge/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cavmerge {

void VehicleParams::validate() const {
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(mass_kg) || !positive(inertia_factor) || !positive(gravity_mps2) ||
      !positive(rolling_coeff) || !positive(air_density) || !positive(drag_coeff) ||
      !positive(frontal_area_m2) || !positive(wheel_radius_m) ||
      !positive(gear_ratio) || !positive(motor_loss_coeff)) {
    throw std::invalid_argument("vehicle parameters must be positive and finite");
  }
  if (!(std::abs(road_slope_rad) < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("road slope must lie in (-pi/2, pi/2)");
  }
}

double resistance_force(double speed_mps, const VehicleParams& p) {
  if (speed_mps < 0.0) {
    throw std::invalid_argument("resistance_force: speed must be non-negative");
  }
  const double grade = p.mass_kg * p.gravity_mps2 *
                       (p.rolling_coeff * std::cos(p.road_slope_rad) +
                        std::sin(p.road_slope_rad));
  const double drag = 0.5 * p.air_density * p.drag_coeff * p.frontal_area_m2 *
                      speed_mps * speed_mps;
  return grade + drag;
}

StateDerivative state_derivative(double speed_mps, double input_n,
                                 const VehicleParams& p) {
  const double accel =
      (input_n - resistance_force(speed_mps, p)) / p.effective_mass();
  return {speed_mps, accel};
}

StepResult integrate_step(double position_m, double speed_mps, double input_n,
                          double dt_s, const VehicleParams& p) {
  if (dt_s <= 0.0) {
    throw std::invalid_argument("integrate_step: dt must be positive");
  }
  // Stage speeds are floored at zero before evaluating resistance; a held
  // braking input may otherwise drive intermediate stages negative.
  auto rate = [&](double v) {
    return (input_n - resistance_force(v < 0.0 ? 0.0 : v, p)) /
           p.effective_mass();
  };

  const double k1v = rate(speed_mps);
  const double k1d = speed_mps;
  const double v2 = speed_mps + 0.5 * dt_s * k1v;
  const double k2v = rate(v2);
  const double k2d = v2;
  const double v3 = speed_mps + 0.5 * dt_s * k2v;
  const double k3v = rate(v3);
  const double k3d = v3;
  const double v4 = speed_mps + dt_s * k3v;
  const double k4v = rate(v4);
  const double k4d = v4;

  double new_speed = speed_mps + dt_s / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  double new_position =
      position_m + dt_s / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);

  bool clamped = false;
  if (new_speed < 0.0) {
    new_speed = 0.0;
    clamped = true;
    if (new_position < position_m) new_position = position_m;
  }
  return {new_position, new_speed, (new_speed - speed_mps) / dt_s, clamped};
}

double motor_power(double speed_mps, double input_n, const VehicleParams& p) {
  return speed_mps * input_n + p.input_loss_coeff() * input_n * input_n;
}

double accumulate_energy(double prev_power_w, double new_power_w, double dt_s) {
  return dt_s * 0.5 * (prev_power_w + new_power_w);
}

}  // namespace cavmerge
