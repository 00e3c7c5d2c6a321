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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cavmerge/sim.hpp"
#include "doctest.h"

using namespace cavmerge;

namespace {

ScenarioSpec bundled(const char* name) {
  return load_scenario(std::string(CAVMERGE_SCENARIO_DIR) + "/" + name + ".json");
}

std::vector<const LogRow*> rows_of(const SimResult& result, std::uint32_t id) {
  std::vector<const LogRow*> out;
  for (const LogRow& r : result.rows)
    if (r.id == id) out.push_back(&r);
  return out;
}

// Re-integrates one vehicle's logged input sequence with `substeps` RK4
// sub-intervals per sample and a matching finer power trapezoid. The input
// is held across each original sample interval, exactly as the plant saw it.
double refined_energy(const std::vector<const LogRow*>& rows, double dt,
                      int substeps, const VehicleParams& p) {
  REQUIRE(rows.size() >= 2);
  double pos = rows.front()->d;
  double v = rows.front()->v;
  double energy = 0.0;
  const double h = dt / substeps;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double u = rows[k]->u;
    double last_power = motor_power(v, u, p);
    for (int j = 0; j < substeps; ++j) {
      const StepResult s = integrate_step(pos, v, u, h, p);
      pos = s.position_m;
      v = s.speed_mps;
      const double power = motor_power(v, u, p);
      energy += accumulate_energy(last_power, power, h);
      last_power = power;
    }
  }
  return energy;
}

}  // namespace

TEST_CASE("a scenario with no arrivals produces an empty run") {
  ScenarioSpec spec;
  spec.name = "empty";
  const SimResult result = run_simulation(spec);
  CHECK(result.rows.empty());
  CHECK(result.events.empty());
  CHECK(result.vehicles.empty());
  CHECK_FALSE(result.collision);
  CHECK(result.end_time_s == 0.0);
}

TEST_CASE("a lone scripted vehicle reproduces its closed-form trajectory") {
  ScenarioSpec spec;
  spec.name = "lone_lead";
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV,
                           DriverKind::SCRIPTED, 20.0, 97.0});
  const SimResult result = run_simulation(spec);

  REQUIRE_FALSE(result.rows.empty());
  for (const LogRow& r : result.rows) {
    CHECK(r.id == 1);
    CHECK(r.d == spec.lead_script.position(r.t));  // analytic, so bitwise
    CHECK(r.v == spec.lead_script.speed(r.t));
    CHECK(r.d <= spec.controller.zone_length_m + spec.runout_m);
  }

  // Crosses the merge point around (400 - 97) / 20 s and leaves the run-out
  // long before the configured duration.
  REQUIRE(result.vehicles.size() == 1);
  REQUIRE(result.vehicles[0].merge_time_s.has_value());
  CHECK(*result.vehicles[0].merge_time_s == doctest::Approx(15.2).epsilon(0.02));
  CHECK(result.vehicles[0].mode == Mode::EXITED);
  CHECK(result.end_time_s < 30.0);

  bool saw_merge = false;
  for (const EventRecord& e : result.events) {
    if (e.kind != EventKind::MERGE) continue;
    saw_merge = true;
    CHECK(e.time_s == *result.vehicles[0].merge_time_s);
    CHECK(e.detail == "travel_time=" + format_double(e.time_s));
  }
  CHECK(saw_merge);
}

TEST_CASE("the three-vehicle scenario merges everyone in entry order") {
  const ScenarioSpec spec = bundled("three_vehicle");
  const SimResult result = run_simulation(spec);

  CHECK_FALSE(result.collision);
  REQUIRE(result.vehicles.size() == 3);

  // Same-instant arrivals admit the main lane first.
  CHECK(result.events[0].kind == EventKind::ENTRY);
  CHECK(result.events[0].vehicle_id == 1);
  CHECK(result.events[0].detail == "main");
  CHECK(result.events[1].kind == EventKind::ENTRY);
  CHECK(result.events[1].vehicle_id == 2);
  CHECK(result.events[1].detail == "ramp");

  std::vector<std::uint32_t> merge_order;
  for (const EventRecord& e : result.events) {
    CHECK(e.kind != EventKind::COLLISION);
    if (e.kind == EventKind::MERGE) merge_order.push_back(e.vehicle_id);
  }
  CHECK(merge_order == std::vector<std::uint32_t>{1, 2, 3});
  for (const VehicleState& v : result.vehicles) {
    REQUIRE(v.merge_time_s.has_value());
    CHECK(*v.merge_time_s > 0.0);
    CHECK(*v.merge_time_s < spec.duration_s);
  }

  // Rows arrive grouped by sample time with ids ascending inside a group, and
  // each vehicle's mode never moves backwards.
  std::map<std::uint32_t, Mode> last_mode;
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const LogRow& prev = result.rows[i - 1];
    const LogRow& cur = result.rows[i];
    CHECK(cur.t >= prev.t);
    if (cur.t == prev.t) CHECK(cur.id > prev.id);
  }
  for (const LogRow& r : result.rows) {
    const auto it = last_mode.find(r.id);
    if (it != last_mode.end())
      CHECK(static_cast<int>(r.mode) >= static_cast<int>(it->second));
    last_mode[r.id] = r.mode;
    if (!std::isnan(r.gap_ip)) CHECK(r.gap_ip > 0.0);
    if (!std::isnan(r.gap_merge)) CHECK(r.gap_merge > 0.0);
    if (r.zone_id == 0) CHECK(r.mode != Mode::MERGING);
  }
}

TEST_CASE("decision evaluation order does not change the run") {
  const ScenarioSpec spec = bundled("three_vehicle");
  SimOptions forward;
  SimOptions reverse;
  reverse.order = EvalOrder::REVERSE;
  const SimResult a = run_simulation(spec, forward);
  const SimResult b = run_simulation(spec, reverse);
  const auto diff = compare_results(a, b);
  CHECK_FALSE(diff.has_value());
  if (diff) MESSAGE(*diff);
}

TEST_CASE("an immediate rerun replays bit for bit") {
  const auto diff = replay_check(bundled("three_vehicle"));
  CHECK_FALSE(diff.has_value());
  if (diff) MESSAGE(*diff);
}

TEST_CASE("the comparator pinpoints a single-bit divergence") {
  const ScenarioSpec spec = bundled("three_vehicle");
  const SimResult a = run_simulation(spec);
  REQUIRE(a.rows.size() > 10);

  SimResult b = a;
  b.rows[5].v = std::nextafter(b.rows[5].v, 1e300);
  auto diff = compare_results(a, b);
  REQUIRE(diff.has_value());
  CHECK(diff->find("row 5") != std::string::npos);
  CHECK(diff->find(" v:") != std::string::npos);

  SimResult c = a;
  REQUIRE_FALSE(c.events.empty());
  c.events[0].detail += "x";
  diff = compare_results(a, c);
  REQUIRE(diff.has_value());
  CHECK(diff->find("event 0") != std::string::npos);
}

TEST_CASE("halving the sample interval barely moves the merge times") {
  ScenarioSpec spec = bundled("three_vehicle");
  const SimResult coarse = run_simulation(spec);
  spec.controller.sample_dt_s = 0.05;
  const SimResult fine = run_simulation(spec);
  REQUIRE(coarse.vehicles.size() == fine.vehicles.size());
  for (std::size_t i = 0; i < coarse.vehicles.size(); ++i) {
    REQUIRE(coarse.vehicles[i].merge_time_s.has_value());
    REQUIRE(fine.vehicles[i].merge_time_s.has_value());
    CHECK(std::abs(*coarse.vehicles[i].merge_time_s -
                   *fine.vehicles[i].merge_time_s) < 0.3);
  }
}

TEST_CASE("the energy column is exactly the trapezoid of the power column") {
  const ScenarioSpec spec = bundled("three_vehicle");
  const SimResult result = run_simulation(spec);
  const double dt = spec.controller.sample_dt_s;

  std::map<std::uint32_t, const LogRow*> last;
  for (const LogRow& r : result.rows) {
    const auto it = last.find(r.id);
    if (it == last.end()) {
      CHECK(r.energy == 0.0);
    } else {
      const LogRow& prev = *it->second;
      CHECK(r.energy == prev.energy + accumulate_energy(prev.power, r.power, dt));
      CHECK(r.power == motor_power(r.v, r.u, spec.vehicle));
    }
    last[r.id] = &r;
  }
}

TEST_CASE("the logged energy converges to a ten-times-finer re-integration") {
  // The power column is sampled at step boundaries, where the input has
  // already switched to the next command, so the logged trapezoid differs
  // from the held-input integral by O(dt) times the input slew. The gap must
  // be small and shrink roughly linearly with the sample interval.
  ScenarioSpec spec = bundled("three_vehicle");
  const SimResult coarse = run_simulation(spec);
  spec.controller.sample_dt_s = 0.05;
  const SimResult halved = run_simulation(spec);

  for (std::uint32_t id : {2u, 3u}) {  // the two controlled vehicles
    const auto rel_error = [&](const SimResult& run, double dt) {
      const auto rows = rows_of(run, id);
      const double fine = refined_energy(rows, dt, 10, spec.vehicle);
      return std::abs(rows.back()->energy - fine) / std::max(std::abs(fine), 1.0);
    };
    const double rel_coarse = rel_error(coarse, 0.1);
    const double rel_halved = rel_error(halved, 0.05);
    CAPTURE(id);
    CAPTURE(rel_coarse);
    CAPTURE(rel_halved);
    CHECK(rel_coarse < 0.02);
    CHECK(rel_halved < 0.65 * rel_coarse);
  }
}

TEST_CASE("a rear-end closure halts the run at the collision step") {
  ScenarioSpec spec;
  spec.name = "rear_end";
  spec.duration_s = 10.0;
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV,
                           DriverKind::SCRIPTED, 20.0, 97.0});
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV, DriverKind::IDM,
                           30.0, 95.0});
  const SimResult result = run_simulation(spec);

  CHECK(result.collision);
  REQUIRE_FALSE(result.events.empty());
  const EventRecord& crash = result.events.back();
  CHECK(crash.kind == EventKind::COLLISION);
  CHECK(crash.vehicle_id == 2);
  CHECK(crash.detail == "leader_id=1");
  CHECK(crash.time_s == result.end_time_s);
  CHECK(result.end_time_s < 1.0);  // ten m/s closure over a two-metre gap
  CHECK(result.rows.back().t < result.end_time_s);
}

TEST_CASE("flooring the speed at zero is reported as a clamp event") {
  ScenarioSpec spec;
  spec.name = "hard_stop";
  spec.duration_s = 2.0;
  spec.lead_script = LeadScript{0.0, 0.0, 0.0, 0.0};  // standing obstacle
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV,
                           DriverKind::SCRIPTED, 0.0, 31.0});
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV, DriverKind::IDM,
                           0.35, 30.0});
  const SimResult result = run_simulation(spec);

  CHECK_FALSE(result.collision);
  bool clamped = false;
  for (const EventRecord& e : result.events)
    if (e.kind == EventKind::SPEED_CLAMP && e.vehicle_id == 2) clamped = true;
  CHECK(clamped);
  CHECK(result.vehicles[1].speed_mps == 0.0);
}

TEST_CASE("a violated barrier at a sample is logged and surfaced as an event") {
  ScenarioSpec spec;
  spec.name = "tailgater";
  spec.duration_s = 0.1;
  spec.lead_script = LeadScript{0.0, 20.0, 0.0, 0.0};
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::HDV,
                           DriverKind::SCRIPTED, 20.0, 5.0});
  spec.arrivals.push_back({0.0, Lane::MAIN, VehicleClass::CAV,
                           DriverKind::CBF_CLF, 20.0, 0.0});
  const SimResult result = run_simulation(spec);

  bool violation = false;
  for (const EventRecord& e : result.events) {
    if (e.kind != EventKind::SAFETY_VIOLATION) continue;
    if (e.vehicle_id == 2 && e.detail == "FOLLOW_HEADWAY value=-31") violation = true;
  }
  CHECK(violation);
  for (const LogRow& r : result.rows)
    if (r.id == 2) CHECK(r.status == "clamped");
}

TEST_CASE("the scenario digest is stable and content-sensitive") {
  const ScenarioSpec spec = bundled("three_vehicle");
  CHECK(scenario_digest(spec) == scenario_digest(spec));
  ScenarioSpec renamed = spec;
  renamed.name = "three_vehicle_b";
  CHECK(scenario_digest(renamed) != scenario_digest(spec));
  ScenarioSpec retimed = spec;
  retimed.arrivals[2].time_s = 1.0;
  CHECK(scenario_digest(retimed) != scenario_digest(spec));
}

TEST_CASE("doubles render with full round-trip precision") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(2.5) == "2.5");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-31.0) == "-31");
}

TEST_CASE("csv writers emit one header plus one line per record") {
  const SimResult result = run_simulation(bundled("three_vehicle"));

  const std::string log = log_csv(result);
  CHECK(log.rfind("t,id,zone_id,lane,klass,mode,d,v,a,u,theta,power,energy,", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') ==
        static_cast<std::ptrdiff_t>(1 + result.rows.size()));

  const std::string events = events_csv(result);
  CHECK(events.rfind("t,id,kind,detail\n", 0) == 0);
  CHECK(std::count(events.begin(), events.end(), '\n') ==
        static_cast<std::ptrdiff_t>(1 + result.events.size()));

  const std::string timings = timings_json(result);
  CHECK(timings.find("\"samples\"") != std::string::npos);
  CHECK_FALSE(result.timings.empty());
}
