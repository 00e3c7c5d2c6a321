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

#include "cavmerge/coordination.hpp"

#include <stdexcept>

namespace cavmerge {

int Coordinator::register_vehicle(std::uint32_t stable_id, Lane lane,
                                  VehicleClass klass, double entry_time_s) {
  Entry e;
  e.zone_id = static_cast<int>(active_.size()) + 1;
  e.stable_id = stable_id;
  e.lane = lane;
  e.klass = klass;
  e.entry_time_s = entry_time_s;
  active_.push_back(e);
  return e.zone_id;
}

void Coordinator::retire(int zone_id) {
  if (zone_id < 1 || zone_id > count()) {
    throw std::out_of_range("coordinator: retire of unknown zone id");
  }
  active_.erase(active_.begin() + (zone_id - 1));
  for (std::size_t i = 0; i < active_.size(); ++i) {
    active_[i].zone_id = static_cast<int>(i) + 1;
  }
}

const Coordinator::Entry& Coordinator::entry(int zone_id) const {
  if (zone_id < 1 || zone_id > count()) {
    throw std::out_of_range("coordinator: unknown zone id");
  }
  return active_[zone_id - 1];
}

std::optional<int> Coordinator::zone_id_of(std::uint32_t stable_id) const {
  for (const auto& e : active_) {
    if (e.stable_id == stable_id) return e.zone_id;
  }
  return std::nullopt;
}

Coordinator::Predecessors Coordinator::predecessors(int zone_id) const {
  const Entry& ego = entry(zone_id);
  Predecessors out;
  for (int i = zone_id - 1; i >= 1; --i) {
    if (active_[i - 1].lane == ego.lane) {
      out.ip = i;
      break;
    }
  }
  if (zone_id > 1) {
    const bool ramp_ego = ego.lane == Lane::RAMP;
    const bool main_with_merging_pred =
        ego.lane == Lane::MAIN && (!out.ip || *out.ip < zone_id - 1);
    if (ramp_ego || main_with_merging_pred) out.merge_pred = zone_id - 1;
  }
  return out;
}

}  // namespace cavmerge
