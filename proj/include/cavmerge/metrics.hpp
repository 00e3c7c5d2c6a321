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

#include <string>
#include <vector>

#include "cavmerge/sim.hpp"

namespace cavmerge {

// Travel time and energy for one vehicle, interpolated at the merge point.
struct VehicleMetrics {
  std::uint32_t id = 0;
  VehicleClass klass = VehicleClass::HDV;
  Lane entry_lane = Lane::MAIN;
  double entry_time_s = 0.0;
  bool completed = false;         // crossed the merge point before the run ended
  double merge_time_s = 0.0;      // absolute crossing instant (NaN if incomplete)
  double travel_time_s = 0.0;     // merge_time - entry_time (NaN if incomplete)
  double energy_j = 0.0;          // accumulated energy at the crossing instant
  double crossing_speed_mps = 0.0;
};

struct MetricsReport {
  std::vector<VehicleMetrics> vehicles;  // ascending stable id
  int total = 0;
  int completed = 0;
  int incomplete = 0;             // excluded from the averages
  bool incomplete_warning = false;
  double avg_travel_time_s = 0.0;  // arithmetic mean over completed vehicles
  double avg_energy_j = 0.0;
  int entry_events = 0;
  int merge_events = 0;
  int fallback_events = 0;
  int violation_events = 0;
  int clamp_events = 0;
  int collision_events = 0;
};

// Pure post-processing over the immutable log. The crossing instant is
// linearly interpolated between the two samples bracketing d = L, and the
// energy of the crossing step is allocated proportionally. Insensitive to row
// order within a step.
MetricsReport summarize(const SimResult& result);

// (baseline - value) / baseline; positive when `value` improves on baseline.
double saving_ratio(double baseline, double value);

// Versioned, deterministic JSON rendering ("cavmerge-summary/1"). The caller
// supplies the resolved manifest as a pre-rendered JSON object (use "{}" when
// there is none); non-finite doubles render as null.
std::string summary_json(const SimResult& result, const MetricsReport& report,
                         const std::string& manifest_json);

}  // namespace cavmerge
