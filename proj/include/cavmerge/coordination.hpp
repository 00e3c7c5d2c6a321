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
#include <vector>

#include "cavmerge/dynamics.hpp"

namespace cavmerge {

// First-in-first-out identity ledger for the coordination zone. Zone ids are
// contiguous 1..N in entry order; retiring id k shifts every id above k down
// by one. Stable keys let callers track a vehicle across renumbering.
class Coordinator {
 public:
  struct Entry {
    int zone_id = 0;            // current position in the FIFO order, 1-based
    std::uint32_t stable_id = 0;
    Lane lane = Lane::MAIN;
    VehicleClass klass = VehicleClass::CAV;
    double entry_time_s = 0.0;
  };

  struct Predecessors {
    std::optional<int> ip;          // nearest lower zone id in the same lane
    std::optional<int> merge_pred;  // zone id the merge constraints bind to
  };

  // Admits a vehicle at the zone entry; returns its zone id (= count + 1).
  // Simultaneous arrivals must be registered main lane first (caller order).
  int register_vehicle(std::uint32_t stable_id, Lane lane, VehicleClass klass,
                       double entry_time_s);

  // Removes a zone id; throws std::out_of_range on an unknown id.
  void retire(int zone_id);

  // Case rules for vehicle `zone_id`:
  //   ip         = nearest lower id in the same lane, if any.
  //   merge_pred = id-1 when the ego is a ramp vehicle, or a main-lane vehicle
  //                whose same-lane predecessor is not id-1 (the in-between
  //                vehicle is merging in front of it). None for id 1.
  Predecessors predecessors(int zone_id) const;

  const Entry& entry(int zone_id) const;
  std::optional<int> zone_id_of(std::uint32_t stable_id) const;
  int count() const { return static_cast<int>(active_.size()); }
  const std::vector<Entry>& entries() const { return active_; }

 private:
  std::vector<Entry> active_;  // index i holds zone id i+1
};

}  // namespace cavmerge
