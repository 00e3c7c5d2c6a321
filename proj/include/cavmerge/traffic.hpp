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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavmerge/barriers.hpp"
#include "cavmerge/dynamics.hpp"

namespace cavmerge {

// Closed-form trajectory of a scripted lead vehicle: sinusoidal speed about a
// constant mean. Times are relative to the vehicle's own entry instant.
struct LeadScript {
  double initial_position_m = 97.0;
  double mean_speed_mps = 20.0;
  double speed_amplitude_mps = 0.8;
  double angular_frequency = 0.3141592653589793;  // rad/s

  double position(double t_s) const;
  double speed(double t_s) const;
  double accel(double t_s) const;
  void validate() const;  // throws std::invalid_argument
};

// Intelligent-driver-model parameters for human-driven vehicles.
struct IdmParams {
  double desired_speed_mps = 30.0;
  double time_headway_s = 1.5;
  double min_spacing_m = 2.0;
  double max_accel_mps2 = 1.5;
  double comfort_decel_mps2 = 2.0;
  double exponent = 4.0;

  void validate() const;  // throws std::invalid_argument
};

// Car-following acceleration. A non-positive gap is reported through the
// collision flag (acceleration saturates to floor_accel), never an exception.
struct IdmResult {
  double accel_mps2 = 0.0;
  bool collision = false;
};
IdmResult idm_accel(double gap_m, double speed_mps, double lead_speed_mps,
                    const IdmParams& idm, double floor_accel_mps2,
                    double ceil_accel_mps2);

// Free-road form (no leader in range).
double idm_free_accel(double speed_mps, const IdmParams& idm,
                      double floor_accel_mps2, double ceil_accel_mps2);

enum class DriverKind { CBF_CLF, IDM, SCRIPTED };

struct Arrival {
  double time_s = 0.0;
  Lane lane = Lane::MAIN;
  VehicleClass klass = VehicleClass::HDV;
  DriverKind driver = DriverKind::IDM;
  double speed_mps = 20.0;
  double position_m = 0.0;  // nonzero only for vehicles seeded inside the zone
};

// Full run description. Serializes to/from versioned JSON ("cavmerge-scenario/1").
struct ScenarioSpec {
  std::string name = "scenario";
  double duration_s = 60.0;
  double runout_m = 200.0;   // simulated distance past the merge point
  std::uint64_t seed = 0;    // reserved for scenario generators; echoed in logs
  VehicleParams vehicle;
  ControllerConfig controller;
  IdmParams idm;
  LeadScript lead_script;
  std::vector<Arrival> arrivals;

  void validate() const;  // throws ScenarioError with a field path
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict JSON load: unknown keys, wrong types and schema-version mismatches
// all throw ScenarioError naming the offending field path. Missing optional
// fields take the defaults above and are echoed back by save/serialization.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& json_text, const std::string& origin);
std::string serialize_scenario(const ScenarioSpec& spec);

std::string_view to_string(Lane lane);
std::string_view to_string(VehicleClass klass);
std::string_view to_string(Mode mode);
std::string_view to_string(DriverKind driver);

}  // namespace cavmerge
