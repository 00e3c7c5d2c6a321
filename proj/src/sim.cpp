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

#include "cavmerge/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace cavmerge {

namespace {

constexpr double kAdmitEps = 1e-9;
// Ramp human drivers start reacting to main-lane traffic this far before the
// merge point, mimicking a driver eyeing the target lane.
constexpr double kRampConflictWindow_m = 50.0;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SimVehicle {
  VehicleState state;
  DriverKind driver = DriverKind::IDM;
  Lane entry_lane = Lane::MAIN;  // approach lane at admission; state.lane flips on merge
  double script_anchor_m = 0.0;  // arrival position minus script origin
  double last_power_w = 0.0;
  bool has_power = false;
};

// Frozen per-step view; decisions read only this.
struct Snapshot {
  std::uint32_t id = 0;
  Lane lane = Lane::MAIN;
  Lane entry_lane = Lane::MAIN;
  Mode mode = Mode::MERGING;
  double pos = 0.0;
  double speed = 0.0;
};

struct StepDecision {
  double input_n = 0.0;
  double theta = kNaN;
  bool is_cav = false;
  bool fallback = false;
  std::vector<ConstraintTag> clamped;
  std::string active_set;
  std::array<double, kBarrierSlots> s{};
  double gap_ip = kNaN;
  double gap_merge = kNaN;
  double solve_time_s = 0.0;
};

// Nearest vehicle strictly ahead of snapshot index `ego` in `lane`; positions
// compare across approaches because both measure distance to the merge point.
// Pass std::nullopt as lane to search both lanes. `skip` excludes one index
// (a vehicle already constrained through the merge rows).
std::optional<std::size_t> nearest_ahead(const std::vector<Snapshot>& snap,
                                         std::size_t ego,
                                         std::optional<Lane> lane,
                                         std::optional<std::size_t> skip =
                                             std::nullopt) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < snap.size(); ++j) {
    if (j == ego) continue;
    if (skip && j == *skip) continue;
    if (lane && snap[j].lane != *lane) continue;
    const bool ahead = snap[j].pos > snap[ego].pos ||
                       (snap[j].pos == snap[ego].pos && snap[j].id < snap[ego].id);
    if (!ahead) continue;
    if (!best || snap[j].pos < snap[*best].pos ||
        (snap[j].pos == snap[*best].pos && snap[j].id < snap[*best].id))
      best = j;
  }
  return best;
}

std::string join_tags(const std::vector<ConstraintTag>& tags) {
  std::string out;
  for (const ConstraintTag tag : tags) {
    if (!out.empty()) out += ';';
    out += to_string(tag);
  }
  return out;
}

StepDecision decide_cav(const std::vector<Snapshot>& snap, std::size_t ego,
                        const SimVehicle& veh, const ScenarioSpec& spec) {
  StepDecision d;
  d.is_cav = true;
  d.s.fill(kNaN);

  ControlNeighbors neighbors;
  // Merge predecessor: the latest earlier entrant still on the road. The
  // merge rows persist until the ego itself crosses the merge point — the
  // time-varying headway equals the car-following headway exactly there, so
  // the handoff to the follow rows is continuous. A predecessor still
  // approaching on the ego's own lane is instead plain car-following (it is
  // the ego's lane leader below).
  std::optional<std::size_t> merge_pred;
  if (snap[ego].mode == Mode::MERGING && ego > 0) {
    const Snapshot& pred = snap[ego - 1];
    const bool cross_lane_pair =
        pred.lane != snap[ego].lane || pred.entry_lane != snap[ego].lane;
    if (cross_lane_pair) {
      merge_pred = ego - 1;
      d.gap_merge = pred.pos - snap[ego].pos;
      neighbors.merge_leader = NeighborView{d.gap_merge, pred.speed};
    }
  }
  if (const auto ip = nearest_ahead(snap, ego, snap[ego].lane, merge_pred)) {
    d.gap_ip = snap[*ip].pos - snap[ego].pos;
    neighbors.lane_leader = NeighborView{d.gap_ip, snap[*ip].speed};
  }

  const ControlDecision dec =
      decide(veh.state, neighbors, spec.controller, spec.vehicle);
  d.input_n = dec.input_n;
  d.theta = dec.theta;
  d.fallback = dec.fallback;
  d.clamped = dec.clamped;
  d.active_set = join_tags(dec.active_set);
  d.s = dec.barrier_values;
  d.solve_time_s = dec.solve_time_s;
  return d;
}

StepDecision decide_idm(const std::vector<Snapshot>& snap, std::size_t ego,
                        const ScenarioSpec& spec) {
  StepDecision d;
  d.s.fill(kNaN);
  const ControllerConfig& cfg = spec.controller;

  std::optional<std::size_t> leader = nearest_ahead(snap, ego, snap[ego].lane);
  if (snap[ego].lane == Lane::RAMP && snap[ego].mode == Mode::MERGING &&
      cfg.zone_length_m - snap[ego].pos <= kRampConflictWindow_m) {
    leader = nearest_ahead(snap, ego, std::nullopt);
  }

  double accel = 0.0;
  if (leader) {
    d.gap_ip = snap[*leader].pos - snap[ego].pos;
    accel = idm_accel(d.gap_ip, snap[ego].speed, snap[*leader].speed, spec.idm,
                      cfg.accel_min_mps2, cfg.accel_max_mps2)
                .accel_mps2;
  } else {
    accel = idm_free_accel(snap[ego].speed, spec.idm, cfg.accel_min_mps2,
                           cfg.accel_max_mps2);
  }
  d.input_n = spec.vehicle.effective_mass() * accel +
              resistance_force(snap[ego].speed, spec.vehicle);
  return d;
}

StepDecision decide_scripted(double tau_s, const SimVehicle& veh,
                             const ScenarioSpec& spec) {
  StepDecision d;
  d.s.fill(kNaN);
  d.input_n = spec.vehicle.effective_mass() * spec.lead_script.accel(tau_s) +
              resistance_force(veh.state.speed_mps, spec.vehicle);
  return d;
}

const char* status_of(const StepDecision& d) {
  if (d.fallback) return "fallback";
  if (!d.clamped.empty()) return "clamped";
  return "ok";
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::optional<std::string> diff_field(const char* where, const char* field,
                                      double a, double b) {
  if (bits(a) == bits(b)) return std::nullopt;
  return std::string(where) + " " + field + ": " + format_double(a) + " vs " +
         format_double(b);
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ENTRY: return "entry";
    case EventKind::MERGE: return "merge";
    case EventKind::RETIRE: return "retire";
    case EventKind::FALLBACK: return "fallback";
    case EventKind::SAFETY_VIOLATION: return "safety_violation";
    case EventKind::SPEED_CLAMP: return "speed_clamp";
    case EventKind::COLLISION: return "collision";
  }
  return "entry";
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

SimResult run_simulation(const ScenarioSpec& spec, const SimOptions& options) {
  spec.validate();
  const double dt = spec.controller.sample_dt_s;
  const double zone_len = spec.controller.zone_length_m;
  const double cull_at = zone_len + spec.runout_m;
  const long max_steps = static_cast<long>(std::floor(spec.duration_s / dt + kAdmitEps));

  // Admission order: arrival time, main lane first on ties, file order last.
  std::vector<std::size_t> arrival_order(spec.arrivals.size());
  std::iota(arrival_order.begin(), arrival_order.end(), std::size_t{0});
  std::stable_sort(arrival_order.begin(), arrival_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const Arrival& x = spec.arrivals[a];
                     const Arrival& y = spec.arrivals[b];
                     if (x.time_s != y.time_s) return x.time_s < y.time_s;
                     return x.lane == Lane::MAIN && y.lane == Lane::RAMP;
                   });

  SimResult out;
  out.spec = spec;
  std::vector<SimVehicle> fleet;
  fleet.reserve(spec.arrivals.size());
  Coordinator coord;
  std::size_t next_arrival = 0;

  for (long k = 0; k <= max_steps; ++k) {
    const double t = k * dt;
    out.end_time_s = t;

    while (next_arrival < arrival_order.size() &&
           spec.arrivals[arrival_order[next_arrival]].time_s <= t + kAdmitEps) {
      const Arrival& a = spec.arrivals[arrival_order[next_arrival]];
      SimVehicle veh;
      veh.driver = a.driver;
      veh.state.id = static_cast<std::uint32_t>(fleet.size() + 1);
      veh.state.klass = a.klass;
      veh.state.lane = a.lane;
      veh.state.mode = Mode::MERGING;
      veh.state.position_m = a.position_m;
      veh.state.speed_mps =
          a.driver == DriverKind::SCRIPTED ? spec.lead_script.speed(0.0) : a.speed_mps;
      veh.state.entry_time_s = t;
      veh.entry_lane = a.lane;
      veh.script_anchor_m = a.position_m - spec.lead_script.initial_position_m;
      coord.register_vehicle(veh.state.id, a.lane, a.klass, t);
      out.events.push_back({t, veh.state.id, EventKind::ENTRY,
                            std::string(to_string(a.lane))});
      fleet.push_back(veh);
      ++next_arrival;
    }

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < fleet.size(); ++i)
      if (fleet[i].state.mode != Mode::EXITED) active.push_back(i);
    if (active.empty()) {
      if (next_arrival == arrival_order.size()) break;
      continue;
    }

    std::vector<Snapshot> snap(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      const SimVehicle& v = fleet[active[j]];
      snap[j] = {v.state.id,         v.state.lane, v.entry_lane,
                 v.state.mode,       v.state.position_m,
                 v.state.speed_mps};
    }

    std::vector<StepDecision> dec(active.size());
    const auto decide_slot = [&](std::size_t j) {
      const SimVehicle& veh = fleet[active[j]];
      switch (veh.driver) {
        case DriverKind::CBF_CLF: dec[j] = decide_cav(snap, j, veh, spec); break;
        case DriverKind::IDM: dec[j] = decide_idm(snap, j, spec); break;
        case DriverKind::SCRIPTED:
          dec[j] = decide_scripted(t - veh.state.entry_time_s, veh, spec);
          break;
      }
    };
    if (options.order == EvalOrder::FORWARD) {
      for (std::size_t j = 0; j < active.size(); ++j) decide_slot(j);
    } else {
      for (std::size_t j = active.size(); j-- > 0;) decide_slot(j);
    }

    // Decision events and timings in id order, independent of eval order.
    for (std::size_t j = 0; j < active.size(); ++j) {
      const std::uint32_t id = snap[j].id;
      for (const ConstraintTag tag : dec[j].clamped) {
        // The first six tags are the barrier slots, in order.
        const std::size_t slot = static_cast<std::size_t>(tag);
        const double value = slot < kBarrierSlots ? dec[j].s[slot] : kNaN;
        out.events.push_back({t, id, EventKind::SAFETY_VIOLATION,
                              std::string(to_string(tag)) + " value=" +
                                  format_double(value)});
      }
      if (dec[j].fallback)
        out.events.push_back({t, id, EventKind::FALLBACK, "program infeasible"});
      if (dec[j].is_cav) out.timings.push_back({t, id, dec[j].solve_time_s});
    }

    for (std::size_t j = 0; j < active.size(); ++j) {
      SimVehicle& veh = fleet[active[j]];
      const double power = motor_power(veh.state.speed_mps, dec[j].input_n, spec.vehicle);
      if (veh.has_power)
        veh.state.energy_used_j += accumulate_energy(veh.last_power_w, power, dt);
      veh.last_power_w = power;
      veh.has_power = true;

      LogRow row;
      row.t = t;
      row.id = veh.state.id;
      row.zone_id = coord.zone_id_of(veh.state.id).value_or(0);
      row.lane = veh.state.lane;
      row.klass = veh.state.klass;
      row.mode = veh.state.mode;
      row.d = veh.state.position_m;
      row.v = veh.state.speed_mps;
      row.a = veh.state.accel_mps2;
      row.u = dec[j].input_n;
      row.theta = dec[j].theta;
      row.power = power;
      row.energy = veh.state.energy_used_j;
      row.status = status_of(dec[j]);
      row.active_set = dec[j].active_set;
      for (std::size_t b = 0; b < kBarrierSlots; ++b) row.s[b] = dec[j].s[b];
      row.gap_ip = dec[j].gap_ip;
      row.gap_merge = dec[j].gap_merge;
      out.rows.push_back(std::move(row));
    }

    if (k == max_steps) break;
    const double t_next = (k + 1) * dt;

    std::vector<double> old_pos(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      SimVehicle& veh = fleet[active[j]];
      old_pos[j] = veh.state.position_m;
      veh.state.input_n = dec[j].input_n;
      if (veh.driver == DriverKind::SCRIPTED) {
        const double tau = t_next - veh.state.entry_time_s;
        const double new_pos = veh.script_anchor_m + spec.lead_script.position(tau);
        const double new_speed = spec.lead_script.speed(tau);
        veh.state.accel_mps2 = (new_speed - veh.state.speed_mps) / dt;
        veh.state.position_m = new_pos;
        veh.state.speed_mps = new_speed;
      } else {
        const StepResult step = integrate_step(veh.state.position_m,
                                               veh.state.speed_mps, dec[j].input_n,
                                               dt, spec.vehicle);
        veh.state.position_m = step.position_m;
        veh.state.speed_mps = step.speed_mps;
        veh.state.accel_mps2 = step.accel_mps2;
        if (step.speed_clamped)
          out.events.push_back({t_next, veh.state.id, EventKind::SPEED_CLAMP,
                                "speed floored at zero"});
      }
    }

    for (std::size_t j = 0; j < active.size(); ++j) {
      SimVehicle& veh = fleet[active[j]];
      if (veh.state.mode != Mode::MERGING || !(veh.state.position_m > zone_len))
        continue;
      const double span = veh.state.position_m - old_pos[j];
      const double cross_t =
          span > 0.0 ? t + dt * (zone_len - old_pos[j]) / span : t_next;
      veh.state.merge_time_s = cross_t;
      veh.state.mode = Mode::FOLLOWING;
      veh.state.lane = Lane::MAIN;
      const int zid = coord.zone_id_of(veh.state.id).value_or(0);
      out.events.push_back({cross_t, veh.state.id, EventKind::MERGE,
                            "travel_time=" +
                                format_double(cross_t - veh.state.entry_time_s)});
      if (zid != 0) {
        coord.retire(zid);
        out.events.push_back({cross_t, veh.state.id, EventKind::RETIRE,
                              "zone_id=" + std::to_string(zid)});
      }
    }

    // Collision pairs come from the pre-step order: if the follower's new
    // position reaches its old leader's, it passed through it during the
    // step. Re-deriving leaders from the new positions would hide exactly
    // those overtakes, because the swapped pair reads as two positive gaps.
    bool collided = false;
    for (std::size_t j = 0; j < active.size() && !collided; ++j) {
      const auto leader = nearest_ahead(snap, j, snap[j].lane);
      if (!leader) continue;
      const double gap = fleet[active[*leader]].state.position_m -
                         fleet[active[j]].state.position_m;
      if (gap <= 0.0) {
        out.events.push_back({t_next, snap[j].id, EventKind::COLLISION,
                              "leader_id=" + std::to_string(snap[*leader].id)});
        collided = true;
      }
    }
    if (collided) {
      out.collision = true;
      out.end_time_s = t_next;
      break;
    }

    for (std::size_t j = 0; j < active.size(); ++j) {
      SimVehicle& veh = fleet[active[j]];
      if (veh.state.position_m > cull_at) veh.state.mode = Mode::EXITED;
    }
  }

  out.vehicles.reserve(fleet.size());
  for (const SimVehicle& veh : fleet) out.vehicles.push_back(veh.state);
  return out;
}

std::optional<std::string> compare_results(const SimResult& a, const SimResult& b) {
  if (a.rows.size() != b.rows.size())
    return "row count: " + std::to_string(a.rows.size()) + " vs " +
           std::to_string(b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const LogRow& x = a.rows[i];
    const LogRow& y = b.rows[i];
    const std::string where = "row " + std::to_string(i);
    if (x.id != y.id) return where + " id";
    if (x.zone_id != y.zone_id) return where + " zone_id";
    if (x.lane != y.lane) return where + " lane";
    if (x.klass != y.klass) return where + " klass";
    if (x.mode != y.mode) return where + " mode";
    if (x.status != y.status) return where + " status";
    if (x.active_set != y.active_set) return where + " active_set";
    const std::pair<const char*, std::pair<double, double>> fields[] = {
        {"t", {x.t, y.t}},         {"d", {x.d, y.d}},
        {"v", {x.v, y.v}},         {"a", {x.a, y.a}},
        {"u", {x.u, y.u}},         {"theta", {x.theta, y.theta}},
        {"power", {x.power, y.power}}, {"energy", {x.energy, y.energy}},
        {"gap_ip", {x.gap_ip, y.gap_ip}}, {"gap_merge", {x.gap_merge, y.gap_merge}},
    };
    for (const auto& [name, pair] : fields)
      if (auto diff = diff_field(where.c_str(), name, pair.first, pair.second))
        return diff;
    for (std::size_t s = 0; s < kBarrierSlots; ++s)
      if (bits(x.s[s]) != bits(y.s[s]))
        return where + " s" + std::to_string(s + 1) + ": " + format_double(x.s[s]) +
               " vs " + format_double(y.s[s]);
  }
  if (a.events.size() != b.events.size())
    return "event count: " + std::to_string(a.events.size()) + " vs " +
           std::to_string(b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const EventRecord& x = a.events[i];
    const EventRecord& y = b.events[i];
    const std::string where = "event " + std::to_string(i);
    if (bits(x.time_s) != bits(y.time_s)) return where + " time";
    if (x.vehicle_id != y.vehicle_id) return where + " vehicle";
    if (x.kind != y.kind) return where + " kind";
    if (x.detail != y.detail) return where + " detail";
  }
  if (a.vehicles.size() != b.vehicles.size()) return "vehicle count";
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    const VehicleState& x = a.vehicles[i];
    const VehicleState& y = b.vehicles[i];
    const std::string where = "vehicle " + std::to_string(i);
    if (bits(x.position_m) != bits(y.position_m)) return where + " position";
    if (bits(x.speed_mps) != bits(y.speed_mps)) return where + " speed";
    if (bits(x.energy_used_j) != bits(y.energy_used_j)) return where + " energy";
    if (x.merge_time_s.has_value() != y.merge_time_s.has_value())
      return where + " merge flag";
    if (x.merge_time_s &&
        bits(*x.merge_time_s) != bits(*y.merge_time_s))
      return where + " merge time";
  }
  return std::nullopt;
}

std::optional<std::string> replay_check(const ScenarioSpec& spec,
                                        const SimOptions& options) {
  const SimResult first = run_simulation(spec, options);
  const SimResult second = run_simulation(spec, options);
  return compare_results(first, second);
}

std::string log_csv(const SimResult& result) {
  std::string out =
      "t,id,zone_id,lane,klass,mode,d,v,a,u,theta,power,energy,status,"
      "active_set,s1,s2,s3,s4,s5,s6,gap_ip,gap_merge\n";
  for (const LogRow& r : result.rows) {
    out += format_double(r.t);
    out += ',' + std::to_string(r.id);
    out += ',' + std::to_string(r.zone_id);
    out += ',';
    out += to_string(r.lane);
    out += ',';
    out += to_string(r.klass);
    out += ',';
    out += to_string(r.mode);
    out += ',' + format_double(r.d);
    out += ',' + format_double(r.v);
    out += ',' + format_double(r.a);
    out += ',' + format_double(r.u);
    out += ',' + format_double(r.theta);
    out += ',' + format_double(r.power);
    out += ',' + format_double(r.energy);
    out += ',' + r.status;
    out += ',' + r.active_set;
    for (std::size_t b = 0; b < kBarrierSlots; ++b) out += ',' + format_double(r.s[b]);
    out += ',' + format_double(r.gap_ip);
    out += ',' + format_double(r.gap_merge);
    out += '\n';
  }
  return out;
}

std::string events_csv(const SimResult& result) {
  std::string out = "t,id,kind,detail\n";
  for (const EventRecord& e : result.events) {
    out += format_double(e.time_s);
    out += ',' + std::to_string(e.vehicle_id);
    out += ',';
    out += to_string(e.kind);
    out += ',' + e.detail;
    out += '\n';
  }
  return out;
}

std::string timings_json(const SimResult& result) {
  std::string out = "{\n  \"samples\": [";
  for (std::size_t i = 0; i < result.timings.size(); ++i) {
    const SolveSample& s = result.timings[i];
    out += i == 0 ? "\n" : ",\n";
    out += "    {\"t\": " + format_double(s.time_s) +
           ", \"id\": " + std::to_string(s.id) +
           ", \"solve_time_s\": " + format_double(s.solve_time_s) + "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

std::uint64_t scenario_digest(const ScenarioSpec& spec) {
  const std::string text = serialize_scenario(spec);
  std::uint64_t hash = 14695981039346656037ull;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace cavmerge
