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

#include <array>
#include <optional>
#include <vector>

#include "cavmerge/barriers.hpp"
#include "cavmerge/qp.hpp"

namespace cavmerge {

// Neighbors visible to one controller at a sampling instant. The lane leader
// is the nearest vehicle ahead on the ego's own approach; the merge leader is
// the conflicting vehicle the ego must yield to at the merge point.
struct ControlNeighbors {
  std::optional<NeighborView> lane_leader;
  std::optional<NeighborView> merge_leader;
};

// Barrier values are reported in a fixed slot order matching the constraint
// tags S1..S6; slots for absent neighbors hold quiet NaN.
inline constexpr std::size_t kBarrierSlots = 6;

// Everything one control step produces. When the program is infeasible the
// decision falls back to a full-brake wheel force and sets `fallback`;
// theta/objective/active_set are then meaningless and left NaN/empty.
struct ControlDecision {
  bool fallback = false;
  double input_n = 0.0;
  double theta = 0.0;
  double objective = 0.0;
  std::vector<ConstraintTag> active_set;
  std::vector<ConstraintTag> clamped;  // barriers non-positive at the sample
  std::array<double, kBarrierSlots> barrier_values{};
  double solve_time_s = 0.0;           // wall clock; excluded from replay data
};

// Assembles the per-step program in deterministic row order: speed barriers,
// merge-gap barriers, lane-gap barriers, speed-tracking row, input box, then
// the optional slack floor. Barriers found non-positive are clamped to a tiny
// positive margin so the row stays usable; the affected tags are appended to
// `clamped` and raw values stored in `barrier_values` when the pointers are
// non-null.
QpProblem build_control_program(const VehicleState& ego,
                                const ControlNeighbors& neighbors,
                                const ControllerConfig& cfg,
                                const VehicleParams& p,
                                std::vector<ConstraintTag>* clamped = nullptr,
                                std::array<double, kBarrierSlots>* barrier_values = nullptr);

// Full-brake wheel force: holds the configured minimum acceleration at the
// current speed. Used when the program reports infeasible.
double fallback_brake_input(const VehicleState& ego, const ControllerConfig& cfg,
                            const VehicleParams& p);

// One control step: assemble, solve, fall back on infeasibility.
ControlDecision decide(const VehicleState& ego, const ControlNeighbors& neighbors,
                       const ControllerConfig& cfg, const VehicleParams& p);

}  // namespace cavmerge
