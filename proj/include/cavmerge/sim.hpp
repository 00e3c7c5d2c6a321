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
#include <string>
#include <vector>

#include "cavmerge/controller.hpp"
#include "cavmerge/coordination.hpp"
#include "cavmerge/traffic.hpp"

namespace cavmerge {

enum class EventKind {
  ENTRY,             // vehicle admitted to the zone
  MERGE,             // crossed the merge point (time interpolated within the step)
  RETIRE,            // zone id released, later ids shifted down
  FALLBACK,          // per-step program infeasible; full brake applied
  SAFETY_VIOLATION,  // a barrier was non-positive at a sampling instant
  SPEED_CLAMP,       // integrator floored the speed at zero
  COLLISION,         // bumper gap closed; the run halts at this step
};
std::string_view to_string(EventKind kind);

struct EventRecord {
  double time_s = 0.0;
  std::uint32_t vehicle_id = 0;
  EventKind kind = EventKind::ENTRY;
  std::string detail;
};

// One logged sample of one vehicle. Doubles that do not apply (e.g. theta for
// a human-driven vehicle, gaps without a neighbor) hold quiet NaN.
struct LogRow {
  double t = 0.0;
  std::uint32_t id = 0;
  int zone_id = 0;  // 0 once retired
  Lane lane = Lane::MAIN;
  VehicleClass klass = VehicleClass::HDV;
  Mode mode = Mode::MERGING;
  double d = 0.0;
  double v = 0.0;
  double a = 0.0;       // realized over the previous step
  double u = 0.0;       // wheel force commanded at t
  double theta = 0.0;
  double power = 0.0;   // drivetrain power at (v, u)
  double energy = 0.0;  // trapezoidal accumulation of the logged power samples
  std::string status;   // ok | clamped | fallback
  std::string active_set;  // ;-joined tight rows of the solved program
  double s[kBarrierSlots] = {};
  double gap_ip = 0.0;
  double gap_merge = 0.0;
};

// Wall-clock sample kept out of the deterministic artifacts.
struct SolveSample {
  double time_s = 0.0;
  std::uint32_t id = 0;
  double solve_time_s = 0.0;
};

// Order in which per-vehicle decisions are evaluated inside a step. Decisions
// read a frozen snapshot, so the results must not depend on this; the option
// exists to let tests prove that.
enum class EvalOrder { FORWARD, REVERSE };

struct SimOptions {
  EvalOrder order = EvalOrder::FORWARD;
};

struct SimResult {
  ScenarioSpec spec;
  std::vector<LogRow> rows;          // grouped by sample time, ascending id
  std::vector<EventRecord> events;   // chronological per step
  std::vector<VehicleState> vehicles;  // final state per stable id (1-based - 1)
  std::vector<SolveSample> timings;  // cav solve latencies, wall clock
  bool collision = false;
  double end_time_s = 0.0;
};

// Runs a scenario to its duration, until every vehicle has left the run-out
// segment, or until a collision halts it. Deterministic for fixed inputs.
SimResult run_simulation(const ScenarioSpec& spec, const SimOptions& options = {});

// Bitwise comparison of two runs (rows, events, final states; wall-clock
// timings excluded). Returns std::nullopt when identical, else a description
// of the first divergence (row/event index, field, both values).
std::optional<std::string> compare_results(const SimResult& a, const SimResult& b);

// Runs the scenario twice and compares the runs with compare_results.
std::optional<std::string> replay_check(const ScenarioSpec& spec,
                                        const SimOptions& options = {});

// Deterministic CSV/JSON renderings. Doubles are printed with %.17g so equal
// bits produce equal text.
std::string log_csv(const SimResult& result);
std::string events_csv(const SimResult& result);
std::string timings_json(const SimResult& result);

// FNV-1a 64-bit digest of the canonical scenario serialization.
std::uint64_t scenario_digest(const ScenarioSpec& spec);

// Formats one double exactly (%.17g), shared by every writer.
std::string format_double(double value);

}  // namespace cavmerge
