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

#include "cavmerge/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace cavmerge {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kSchemaId = "cavmerge-scenario/1";

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

void expect_object(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown_keys(const ordered_json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail(path + "/" + item.key(), "unknown field");
  }
}

double get_num(const ordered_json& obj, const std::string& path, const char* key,
               double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(path + "/" + key, "expected a number");
  return it->get<double>();
}

bool get_bool(const ordered_json& obj, const std::string& path, const char* key,
              bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(path + "/" + key, "expected a boolean");
  return it->get<bool>();
}

std::uint64_t get_uint(const ordered_json& obj, const std::string& path,
                       const char* key, std::uint64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned()) fail(path + "/" + key, "expected a non-negative integer");
  return it->get<std::uint64_t>();
}

std::string get_str(const ordered_json& obj, const std::string& path,
                    const char* key, const std::string& fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(path + "/" + key, "expected a string");
  return it->get<std::string>();
}

Lane parse_lane(const std::string& s, const std::string& path) {
  if (s == "main") return Lane::MAIN;
  if (s == "ramp") return Lane::RAMP;
  fail(path, "expected \"main\" or \"ramp\", got \"" + s + "\"");
}

VehicleClass parse_class(const std::string& s, const std::string& path) {
  if (s == "cav") return VehicleClass::CAV;
  if (s == "hdv") return VehicleClass::HDV;
  fail(path, "expected \"cav\" or \"hdv\", got \"" + s + "\"");
}

DriverKind parse_driver(const std::string& s, const std::string& path) {
  if (s == "cbf_clf") return DriverKind::CBF_CLF;
  if (s == "idm") return DriverKind::IDM;
  if (s == "scripted") return DriverKind::SCRIPTED;
  fail(path, "expected \"cbf_clf\", \"idm\" or \"scripted\", got \"" + s + "\"");
}

VehicleParams parse_vehicle(const ordered_json& obj, const std::string& path) {
  expect_object(obj, path);
  reject_unknown_keys(obj, path,
                      {"mass_kg", "inertia_factor", "gravity_mps2", "rolling_coeff",
                       "road_slope_rad", "air_density", "drag_coeff",
                       "frontal_area_m2", "wheel_radius_m", "gear_ratio",
                       "motor_loss_coeff"});
  VehicleParams p;
  p.mass_kg = get_num(obj, path, "mass_kg", p.mass_kg);
  p.inertia_factor = get_num(obj, path, "inertia_factor", p.inertia_factor);
  p.gravity_mps2 = get_num(obj, path, "gravity_mps2", p.gravity_mps2);
  p.rolling_coeff = get_num(obj, path, "rolling_coeff", p.rolling_coeff);
  p.road_slope_rad = get_num(obj, path, "road_slope_rad", p.road_slope_rad);
  p.air_density = get_num(obj, path, "air_density", p.air_density);
  p.drag_coeff = get_num(obj, path, "drag_coeff", p.drag_coeff);
  p.frontal_area_m2 = get_num(obj, path, "frontal_area_m2", p.frontal_area_m2);
  p.wheel_radius_m = get_num(obj, path, "wheel_radius_m", p.wheel_radius_m);
  p.gear_ratio = get_num(obj, path, "gear_ratio", p.gear_ratio);
  p.motor_loss_coeff = get_num(obj, path, "motor_loss_coeff", p.motor_loss_coeff);
  return p;
}

ControllerConfig parse_controller(const ordered_json& obj, const std::string& path) {
  expect_object(obj, path);
  reject_unknown_keys(obj, path,
                      {"time_headway_s", "min_gap_m", "zone_length_m", "clf_rate",
                       "slack_weight", "travel_time_weight", "cbf_gamma",
                       "accel_min_mps2", "accel_max_mps2", "speed_min_mps",
                       "speed_max_mps", "speed_desired_mps", "sample_dt_s",
                       "theta_nonnegative"});
  ControllerConfig c;
  c.time_headway_s = get_num(obj, path, "time_headway_s", c.time_headway_s);
  c.min_gap_m = get_num(obj, path, "min_gap_m", c.min_gap_m);
  c.zone_length_m = get_num(obj, path, "zone_length_m", c.zone_length_m);
  c.clf_rate = get_num(obj, path, "clf_rate", c.clf_rate);
  c.slack_weight = get_num(obj, path, "slack_weight", c.slack_weight);
  c.travel_time_weight = get_num(obj, path, "travel_time_weight", c.travel_time_weight);
  c.cbf_gamma = get_num(obj, path, "cbf_gamma", c.cbf_gamma);
  c.accel_min_mps2 = get_num(obj, path, "accel_min_mps2", c.accel_min_mps2);
  c.accel_max_mps2 = get_num(obj, path, "accel_max_mps2", c.accel_max_mps2);
  c.speed_min_mps = get_num(obj, path, "speed_min_mps", c.speed_min_mps);
  c.speed_max_mps = get_num(obj, path, "speed_max_mps", c.speed_max_mps);
  c.speed_desired_mps = get_num(obj, path, "speed_desired_mps", c.speed_desired_mps);
  c.sample_dt_s = get_num(obj, path, "sample_dt_s", c.sample_dt_s);
  c.theta_nonnegative = get_bool(obj, path, "theta_nonnegative", c.theta_nonnegative);
  return c;
}

IdmParams parse_idm(const ordered_json& obj, const std::string& path) {
  expect_object(obj, path);
  reject_unknown_keys(obj, path,
                      {"desired_speed_mps", "time_headway_s", "min_spacing_m",
                       "max_accel_mps2", "comfort_decel_mps2", "exponent"});
  IdmParams idm;
  idm.desired_speed_mps = get_num(obj, path, "desired_speed_mps", idm.desired_speed_mps);
  idm.time_headway_s = get_num(obj, path, "time_headway_s", idm.time_headway_s);
  idm.min_spacing_m = get_num(obj, path, "min_spacing_m", idm.min_spacing_m);
  idm.max_accel_mps2 = get_num(obj, path, "max_accel_mps2", idm.max_accel_mps2);
  idm.comfort_decel_mps2 = get_num(obj, path, "comfort_decel_mps2", idm.comfort_decel_mps2);
  idm.exponent = get_num(obj, path, "exponent", idm.exponent);
  return idm;
}

LeadScript parse_lead(const ordered_json& obj, const std::string& path) {
  expect_object(obj, path);
  reject_unknown_keys(obj, path,
                      {"initial_position_m", "mean_speed_mps", "speed_amplitude_mps",
                       "angular_frequency"});
  LeadScript s;
  s.initial_position_m = get_num(obj, path, "initial_position_m", s.initial_position_m);
  s.mean_speed_mps = get_num(obj, path, "mean_speed_mps", s.mean_speed_mps);
  s.speed_amplitude_mps = get_num(obj, path, "speed_amplitude_mps", s.speed_amplitude_mps);
  s.angular_frequency = get_num(obj, path, "angular_frequency", s.angular_frequency);
  return s;
}

Arrival parse_arrival(const ordered_json& obj, const std::string& path) {
  expect_object(obj, path);
  reject_unknown_keys(obj, path,
                      {"time_s", "lane", "class", "driver", "speed_mps", "position_m"});
  Arrival a;
  a.time_s = get_num(obj, path, "time_s", a.time_s);
  a.lane = parse_lane(get_str(obj, path, "lane", "main"), path + "/lane");
  a.klass = parse_class(get_str(obj, path, "class", "hdv"), path + "/class");
  // Driver defaults to the natural choice for the class.
  const std::string default_driver =
      a.klass == VehicleClass::CAV ? "cbf_clf" : "idm";
  a.driver = parse_driver(get_str(obj, path, "driver", default_driver), path + "/driver");
  a.speed_mps = get_num(obj, path, "speed_mps", a.speed_mps);
  a.position_m = get_num(obj, path, "position_m", a.position_m);
  return a;
}

ordered_json dump_arrival(const Arrival& a) {
  ordered_json j;
  j["time_s"] = a.time_s;
  j["lane"] = std::string(to_string(a.lane));
  j["class"] = std::string(to_string(a.klass));
  j["driver"] = std::string(to_string(a.driver));
  j["speed_mps"] = a.speed_mps;
  j["position_m"] = a.position_m;
  return j;
}

}  // namespace

double LeadScript::position(double t_s) const {
  // Exact integral of speed(): d0 + v_mean t - (A/w)(1 - cos(w t)).
  if (angular_frequency == 0.0) return initial_position_m + mean_speed_mps * t_s;
  return initial_position_m + mean_speed_mps * t_s -
         speed_amplitude_mps / angular_frequency *
             (1.0 - std::cos(angular_frequency * t_s));
}

double LeadScript::speed(double t_s) const {
  return mean_speed_mps - speed_amplitude_mps * std::sin(angular_frequency * t_s);
}

double LeadScript::accel(double t_s) const {
  return -speed_amplitude_mps * angular_frequency *
         std::cos(angular_frequency * t_s);
}

void LeadScript::validate() const {
  if (!(mean_speed_mps >= 0.0))
    throw std::invalid_argument("lead script: mean speed must be non-negative");
  if (!(speed_amplitude_mps >= 0.0))
    throw std::invalid_argument("lead script: speed amplitude must be non-negative");
  if (speed_amplitude_mps > mean_speed_mps)
    throw std::invalid_argument("lead script: amplitude exceeds mean speed (reverses)");
  if (!(angular_frequency >= 0.0))
    throw std::invalid_argument("lead script: angular frequency must be non-negative");
  if (!(initial_position_m >= 0.0))
    throw std::invalid_argument("lead script: initial position must be non-negative");
}

void IdmParams::validate() const {
  if (!(desired_speed_mps > 0.0))
    throw std::invalid_argument("idm: desired speed must be positive");
  if (!(time_headway_s > 0.0))
    throw std::invalid_argument("idm: time headway must be positive");
  if (!(min_spacing_m >= 0.0))
    throw std::invalid_argument("idm: minimum spacing must be non-negative");
  if (!(max_accel_mps2 > 0.0))
    throw std::invalid_argument("idm: maximum acceleration must be positive");
  if (!(comfort_decel_mps2 > 0.0))
    throw std::invalid_argument("idm: comfortable deceleration must be positive");
  if (!(exponent > 0.0))
    throw std::invalid_argument("idm: exponent must be positive");
}

IdmResult idm_accel(double gap_m, double speed_mps, double lead_speed_mps,
                    const IdmParams& idm, double floor_accel_mps2,
                    double ceil_accel_mps2) {
  IdmResult out;
  if (gap_m <= 0.0) {
    out.accel_mps2 = floor_accel_mps2;
    out.collision = true;
    return out;
  }
  const double closing = speed_mps - lead_speed_mps;
  const double desired_gap =
      idm.min_spacing_m + speed_mps * idm.time_headway_s +
      speed_mps * closing /
          (2.0 * std::sqrt(idm.max_accel_mps2 * idm.comfort_decel_mps2));
  const double ratio = desired_gap / gap_m;
  const double a = idm.max_accel_mps2 *
                   (1.0 - std::pow(speed_mps / idm.desired_speed_mps, idm.exponent) -
                    ratio * ratio);
  out.accel_mps2 = std::clamp(a, floor_accel_mps2, ceil_accel_mps2);
  return out;
}

double idm_free_accel(double speed_mps, const IdmParams& idm,
                      double floor_accel_mps2, double ceil_accel_mps2) {
  const double a = idm.max_accel_mps2 *
                   (1.0 - std::pow(speed_mps / idm.desired_speed_mps, idm.exponent));
  return std::clamp(a, floor_accel_mps2, ceil_accel_mps2);
}

void ScenarioSpec::validate() const {
  if (name.empty()) throw ScenarioError("/name: must not be empty");
  if (!(duration_s > 0.0)) throw ScenarioError("/duration_s: must be positive");
  if (!(runout_m >= 0.0)) throw ScenarioError("/runout_m: must be non-negative");
  try {
    vehicle.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("/vehicle: ") + e.what());
  }
  try {
    controller.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("/controller: ") + e.what());
  }
  try {
    idm.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("/idm: ") + e.what());
  }
  try {
    lead_script.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("/lead_script: ") + e.what());
  }
  double last_time[2] = {-1.0, -1.0};
  int scripted_count[2] = {0, 0};
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const std::string path = "/arrivals/" + std::to_string(i);
    const Arrival& a = arrivals[i];
    const int lane_idx = a.lane == Lane::MAIN ? 0 : 1;
    if (a.time_s < last_time[lane_idx])
      throw ScenarioError(path + "/time_s: arrival times must be nondecreasing per lane");
    last_time[lane_idx] = a.time_s;
    if (a.driver == DriverKind::SCRIPTED && ++scripted_count[lane_idx] > 1)
      throw ScenarioError(path + "/driver: at most one scripted lead per lane");
    if (!(a.time_s >= 0.0)) throw ScenarioError(path + "/time_s: must be non-negative");
    if (!(a.speed_mps >= 0.0))
      throw ScenarioError(path + "/speed_mps: must be non-negative");
    if (!(a.position_m >= 0.0) || a.position_m >= controller.zone_length_m)
      throw ScenarioError(path + "/position_m: must lie in [0, zone length)");
    if (a.klass == VehicleClass::CAV && a.driver != DriverKind::CBF_CLF)
      throw ScenarioError(path + "/driver: a cav must use the cbf_clf driver");
    if (a.klass == VehicleClass::HDV && a.driver == DriverKind::CBF_CLF)
      throw ScenarioError(path + "/driver: an hdv cannot use the cbf_clf driver");
    if (a.driver == DriverKind::SCRIPTED && a.lane == Lane::RAMP)
      throw ScenarioError(path + "/driver: scripted vehicles must run on the main lane");
  }
}

ScenarioSpec parse_scenario(const std::string& json_text, const std::string& origin) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
  expect_object(root, origin);
  reject_unknown_keys(root, origin,
                      {"schema", "name", "duration_s", "runout_m", "seed", "vehicle",
                       "controller", "idm", "lead_script", "arrivals"});

  const std::string schema = get_str(root, origin, "schema", "");
  if (schema != kSchemaId)
    fail(origin + "/schema",
         "expected \"" + std::string(kSchemaId) + "\", got \"" + schema + "\"");

  ScenarioSpec spec;
  spec.name = get_str(root, origin, "name", spec.name);
  spec.duration_s = get_num(root, origin, "duration_s", spec.duration_s);
  spec.runout_m = get_num(root, origin, "runout_m", spec.runout_m);
  spec.seed = get_uint(root, origin, "seed", spec.seed);
  if (auto it = root.find("vehicle"); it != root.end())
    spec.vehicle = parse_vehicle(*it, origin + "/vehicle");
  if (auto it = root.find("controller"); it != root.end())
    spec.controller = parse_controller(*it, origin + "/controller");
  if (auto it = root.find("idm"); it != root.end())
    spec.idm = parse_idm(*it, origin + "/idm");
  if (auto it = root.find("lead_script"); it != root.end())
    spec.lead_script = parse_lead(*it, origin + "/lead_script");
  if (auto it = root.find("arrivals"); it != root.end()) {
    if (!it->is_array()) fail(origin + "/arrivals", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      spec.arrivals.push_back(
          parse_arrival((*it)[i], origin + "/arrivals/" + std::to_string(i)));
  }
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  ordered_json j;
  j["schema"] = kSchemaId;
  j["name"] = spec.name;
  j["duration_s"] = spec.duration_s;
  j["runout_m"] = spec.runout_m;
  j["seed"] = spec.seed;

  ordered_json veh;
  veh["mass_kg"] = spec.vehicle.mass_kg;
  veh["inertia_factor"] = spec.vehicle.inertia_factor;
  veh["gravity_mps2"] = spec.vehicle.gravity_mps2;
  veh["rolling_coeff"] = spec.vehicle.rolling_coeff;
  veh["road_slope_rad"] = spec.vehicle.road_slope_rad;
  veh["air_density"] = spec.vehicle.air_density;
  veh["drag_coeff"] = spec.vehicle.drag_coeff;
  veh["frontal_area_m2"] = spec.vehicle.frontal_area_m2;
  veh["wheel_radius_m"] = spec.vehicle.wheel_radius_m;
  veh["gear_ratio"] = spec.vehicle.gear_ratio;
  veh["motor_loss_coeff"] = spec.vehicle.motor_loss_coeff;
  j["vehicle"] = veh;

  ordered_json ctl;
  ctl["time_headway_s"] = spec.controller.time_headway_s;
  ctl["min_gap_m"] = spec.controller.min_gap_m;
  ctl["zone_length_m"] = spec.controller.zone_length_m;
  ctl["clf_rate"] = spec.controller.clf_rate;
  ctl["slack_weight"] = spec.controller.slack_weight;
  ctl["travel_time_weight"] = spec.controller.travel_time_weight;
  ctl["cbf_gamma"] = spec.controller.cbf_gamma;
  ctl["accel_min_mps2"] = spec.controller.accel_min_mps2;
  ctl["accel_max_mps2"] = spec.controller.accel_max_mps2;
  ctl["speed_min_mps"] = spec.controller.speed_min_mps;
  ctl["speed_max_mps"] = spec.controller.speed_max_mps;
  ctl["speed_desired_mps"] = spec.controller.speed_desired_mps;
  ctl["sample_dt_s"] = spec.controller.sample_dt_s;
  ctl["theta_nonnegative"] = spec.controller.theta_nonnegative;
  j["controller"] = ctl;

  ordered_json idm;
  idm["desired_speed_mps"] = spec.idm.desired_speed_mps;
  idm["time_headway_s"] = spec.idm.time_headway_s;
  idm["min_spacing_m"] = spec.idm.min_spacing_m;
  idm["max_accel_mps2"] = spec.idm.max_accel_mps2;
  idm["comfort_decel_mps2"] = spec.idm.comfort_decel_mps2;
  idm["exponent"] = spec.idm.exponent;
  j["idm"] = idm;

  ordered_json lead;
  lead["initial_position_m"] = spec.lead_script.initial_position_m;
  lead["mean_speed_mps"] = spec.lead_script.mean_speed_mps;
  lead["speed_amplitude_mps"] = spec.lead_script.speed_amplitude_mps;
  lead["angular_frequency"] = spec.lead_script.angular_frequency;
  j["lead_script"] = lead;

  j["arrivals"] = ordered_json::array();
  for (const Arrival& a : spec.arrivals) j["arrivals"].push_back(dump_arrival(a));

  return j.dump(2) + "\n";
}

std::string_view to_string(Lane lane) {
  return lane == Lane::MAIN ? "main" : "ramp";
}

std::string_view to_string(VehicleClass klass) {
  return klass == VehicleClass::CAV ? "cav" : "hdv";
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::MERGING: return "merging";
    case Mode::FOLLOWING: return "following";
    case Mode::EXITED: return "exited";
  }
  return "merging";
}

std::string_view to_string(DriverKind driver) {
  switch (driver) {
    case DriverKind::CBF_CLF: return "cbf_clf";
    case DriverKind::IDM: return "idm";
    case DriverKind::SCRIPTED: return "scripted";
  }
  return "idm";
}

}  // namespace cavmerge
