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

#include "cavmerge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace cavmerge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string json_num(double v) {
  if (!std::isfinite(v)) return "null";
  return format_double(v);
}

}  // namespace

MetricsReport summarize(const SimResult& result) {
  const double zone_len = result.spec.controller.zone_length_m;
  MetricsReport report;

  // Per-vehicle row sequences; rows are logged grouped by time, so each
  // vehicle's sequence comes out time-sorted whatever the within-step order.
  std::map<std::uint32_t, std::vector<const LogRow*>> by_id;
  for (const LogRow& row : result.rows) by_id[row.id].push_back(&row);

  report.total = static_cast<int>(result.vehicles.size());
  for (const VehicleState& final_state : result.vehicles) {
    VehicleMetrics m;
    m.id = final_state.id;
    m.klass = final_state.klass;
    m.entry_time_s = final_state.entry_time_s;
    m.merge_time_s = kNaN;
    m.travel_time_s = kNaN;
    m.energy_j = kNaN;
    m.crossing_speed_mps = kNaN;

    const auto it = by_id.find(final_state.id);
    const std::vector<const LogRow*>* rows =
        it == by_id.end() ? nullptr : &it->second;
    m.entry_lane = rows && !rows->empty() ? rows->front()->lane : final_state.lane;

    if (rows) {
      for (std::size_t i = 0; i + 1 < rows->size(); ++i) {
        const LogRow& r0 = *(*rows)[i];
        const LogRow& r1 = *(*rows)[i + 1];
        if (!(r0.d <= zone_len && r1.d > zone_len)) continue;
        const double frac = (zone_len - r0.d) / (r1.d - r0.d);
        m.merge_time_s = r0.t + (r1.t - r0.t) * frac;
        m.travel_time_s = m.merge_time_s - m.entry_time_s;
        m.energy_j = r0.energy + (r1.energy - r0.energy) * frac;
        m.crossing_speed_mps = r0.v + (r1.v - r0.v) * frac;
        m.completed = true;
        break;
      }
    }
    if (!m.completed && final_state.merge_time_s) {
      // Crossed inside the very last (unlogged) step of a halted run; fall
      // back to the step-level interpolation and the last logged energy.
      m.merge_time_s = *final_state.merge_time_s;
      m.travel_time_s = m.merge_time_s - m.entry_time_s;
      m.energy_j = rows && !rows->empty() ? rows->back()->energy : kNaN;
      m.crossing_speed_mps = rows && !rows->empty() ? rows->back()->v : kNaN;
      m.completed = true;
    }

    if (m.completed)
      ++report.completed;
    else
      ++report.incomplete;
    report.vehicles.push_back(m);
  }

  report.incomplete_warning = report.incomplete > 0;
  if (report.completed > 0) {
    double time_sum = 0.0;
    double energy_sum = 0.0;
    for (const VehicleMetrics& m : report.vehicles) {
      if (!m.completed) continue;
      time_sum += m.travel_time_s;
      energy_sum += m.energy_j;
    }
    report.avg_travel_time_s = time_sum / report.completed;
    report.avg_energy_j = energy_sum / report.completed;
  } else {
    report.avg_travel_time_s = kNaN;
    report.avg_energy_j = kNaN;
  }

  for (const EventRecord& e : result.events) {
    switch (e.kind) {
      case EventKind::ENTRY: ++report.entry_events; break;
      case EventKind::MERGE: ++report.merge_events; break;
      case EventKind::RETIRE: break;
      case EventKind::FALLBACK: ++report.fallback_events; break;
      case EventKind::SAFETY_VIOLATION: ++report.violation_events; break;
      case EventKind::SPEED_CLAMP: ++report.clamp_events; break;
      case EventKind::COLLISION: ++report.collision_events; break;
    }
  }
  return report;
}

double saving_ratio(double baseline, double value) {
  return (baseline - value) / baseline;
}

std::string summary_json(const SimResult& result, const MetricsReport& report,
                         const std::string& manifest_json) {
  char digest[20];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(scenario_digest(result.spec)));

  std::string out = "{\n";
  out += "  \"schema\": \"cavmerge-summary/1\",\n";
  out += "  \"scenario\": \"" + result.spec.name + "\",\n";
  out += "  \"config_digest\": \"" + std::string(digest) + "\",\n";
  out += "  \"manifest\": " + (manifest_json.empty() ? "{}" : manifest_json) + ",\n";
  out += "  \"end_time_s\": " + json_num(result.end_time_s) + ",\n";
  out += std::string("  \"collision\": ") + (result.collision ? "true" : "false") +
         ",\n";
  out += "  \"events\": {\n";
  out += "    \"entry\": " + std::to_string(report.entry_events) + ",\n";
  out += "    \"merge\": " + std::to_string(report.merge_events) + ",\n";
  out += "    \"fallback\": " + std::to_string(report.fallback_events) + ",\n";
  out += "    \"safety_violation\": " + std::to_string(report.violation_events) +
         ",\n";
  out += "    \"speed_clamp\": " + std::to_string(report.clamp_events) + ",\n";
  out += "    \"collision\": " + std::to_string(report.collision_events) + "\n";
  out += "  },\n";
  out += "  \"averages\": {\n";
  out += "    \"travel_time_s\": " + json_num(report.avg_travel_time_s) + ",\n";
  out += "    \"energy_j\": " + json_num(report.avg_energy_j) + ",\n";
  out += "    \"completed\": " + std::to_string(report.completed) + ",\n";
  out += "    \"incomplete\": " + std::to_string(report.incomplete) + ",\n";
  out += std::string("    \"warning_incomplete\": ") +
         (report.incomplete_warning ? "true" : "false") + "\n";
  out += "  },\n";
  out += "  \"vehicles\": [";
  for (std::size_t i = 0; i < report.vehicles.size(); ++i) {
    const VehicleMetrics& m = report.vehicles[i];
    out += i == 0 ? "\n" : ",\n";
    out += "    {\"id\": " + std::to_string(m.id);
    out += ", \"class\": \"" + std::string(to_string(m.klass)) + "\"";
    out += ", \"entry_lane\": \"" + std::string(to_string(m.entry_lane)) + "\"";
    out += ", \"entry_time_s\": " + json_num(m.entry_time_s);
    out += std::string(", \"completed\": ") + (m.completed ? "true" : "false");
    out += ", \"merge_time_s\": " + json_num(m.merge_time_s);
    out += ", \"travel_time_s\": " + json_num(m.travel_time_s);
    out += ", \"energy_j\": " + json_num(m.energy_j);
    out += ", \"crossing_speed_mps\": " + json_num(m.crossing_speed_mps) + "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

}  // namespace cavmerge
