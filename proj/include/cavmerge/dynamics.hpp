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

#pragma once

#include <cstdint>
#include <optional>

namespace cavmerge {

enum class Lane { MAIN, RAMP };
enum class VehicleClass { CAV, HDV };

// MERGING: inside the coordination zone, upstream of the merge point.
// FOLLOWING: past the merge point, still simulated through the run-out segment.
// EXITED: left the run-out segment; no longer stepped or logged.
enum class Mode { MERGING, FOLLOWING, EXITED };

// Longitudinal plant parameters. SI units throughout.
struct VehicleParams {
  double mass_kg = 1997.0;
  double inertia_factor = 1.05;    // rotating-mass correction on the wheel force
  double gravity_mps2 = 9.81;
  double rolling_coeff = 0.012;
  double road_slope_rad = 0.0;
  double air_density = 1.2;        // kg/m^3
  double drag_coeff = 0.22;
  double frontal_area_m2 = 2.4;
  double wheel_radius_m = 0.34;
  double gear_ratio = 9.7;
  double motor_loss_coeff = 0.8730;

  // Effective mass seen by the wheel-force input.
  double effective_mass() const { return inertia_factor * mass_kg; }

  // Quadratic input-loss coefficient of the drivetrain, referred to wheel force.
  double input_loss_coeff() const {
    return motor_loss_coeff * wheel_radius_m * wheel_radius_m /
           (gear_ratio * gear_ratio);
  }

  // Throws std::invalid_argument when a physical parameter is non-positive
  // or the slope magnitude reaches pi/2.
  void validate() const;
};

// Per-vehicle longitudinal state. Positions are measured along the vehicle's
// own approach path: 0 at zone entry, zone length L at the merge point, and
// increasing through the downstream run-out.
struct VehicleState {
  std::uint32_t id = 0;            // stable identity, assigned in admission order
  VehicleClass klass = VehicleClass::CAV;
  Lane lane = Lane::MAIN;
  Mode mode = Mode::MERGING;
  double position_m = 0.0;
  double speed_mps = 0.0;
  double accel_mps2 = 0.0;         // realized over the last step
  double input_n = 0.0;            // wheel force applied over the last step
  double entry_time_s = 0.0;
  std::optional<double> merge_time_s;  // set iff mode is FOLLOWING or EXITED
  double energy_used_j = 0.0;      // signed; regeneration may drive it negative
};

// Rolling + grade + aerodynamic resistance (N). Rejects v < 0.
double resistance_force(double speed_mps, const VehicleParams& p);

// Longitudinal derivative (d_dot, v_dot) under wheel force u.
struct StateDerivative {
  double position_rate;
  double speed_rate;
};
StateDerivative state_derivative(double speed_mps, double input_n,
                                 const VehicleParams& p);

// One RK4 step of size dt with a held input. Speed is floored at zero; the
// flag reports that the floor was hit so callers can log saturated braking.
struct StepResult {
  double position_m;
  double speed_mps;
  double accel_mps2;   // (v_new - v_old) / dt
  bool speed_clamped;
};
StepResult integrate_step(double position_m, double speed_mps, double input_n,
                          double dt_s, const VehicleParams& p);

// Instantaneous drivetrain power: traction power plus quadratic loss.
// Negative values model regeneration.
double motor_power(double speed_mps, double input_n, const VehicleParams& p);

// Trapezoidal energy increment between two logged power samples.
double accumulate_energy(double prev_power_w, double new_power_w, double dt_s);

}  // namespace cavmerge
