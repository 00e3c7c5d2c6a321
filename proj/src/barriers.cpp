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

#include "cavmerge/barriers.hpp"

#include <cmath>
#include <stdexcept>

namespace cavmerge {

void ControllerConfig::validate() const {
  auto bad = [](bool cond) { return cond; };
  if (bad(!(time_headway_s > 0.0)) || bad(!(zone_length_m > 0.0)) ||
      bad(!(clf_rate > 0.0)) || bad(!(slack_weight > 0.0)) ||
      bad(!(cbf_gamma > 0.0)) || bad(!(sample_dt_s > 0.0))) {
    throw std::invalid_argument(
        "controller config: headway, zone length, rates, weights and dt must be positive");
  }
  if (min_gap_m < 0.0 || travel_time_weight < 0.0) {
    throw std::invalid_argument("controller config: gaps and weights must be non-negative");
  }
  if (!(accel_min_mps2 < 0.0 && 0.0 < accel_max_mps2)) {
    throw std::invalid_argument("controller config: accel bounds must straddle zero");
  }
  if (!(speed_min_mps < speed_desired_mps && speed_desired_mps <= speed_max_mps)) {
    throw std::invalid_argument(
        "controller config: need speed_min < speed_desired <= speed_max");
  }
  if (speed_min_mps < 0.0) {
    throw std::invalid_argument("controller config: speed_min must be non-negative");
  }
}

std::string_view to_string(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::MAX_SPEED: return "MAX_SPEED";
    case ConstraintTag::MIN_SPEED: return "MIN_SPEED";
    case ConstraintTag::MERGE_HEADWAY: return "MERGE_HEADWAY";
    case ConstraintTag::MERGE_BRAKE: return "MERGE_BRAKE";
    case ConstraintTag::FOLLOW_HEADWAY: return "FOLLOW_HEADWAY";
    case ConstraintTag::FOLLOW_BRAKE: return "FOLLOW_BRAKE";
    case ConstraintTag::CLF: return "CLF";
    case ConstraintTag::INPUT_MAX: return "INPUT_MAX";
    case ConstraintTag::INPUT_MIN: return "INPUT_MIN";
    case ConstraintTag::THETA_FLOOR: return "THETA_FLOOR";
  }
  return "UNKNOWN";
}

double merge_headway_factor(double position_m, const ControllerConfig& cfg) {
  return cfg.time_headway_s * position_m / cfg.zone_length_m;
}

namespace {

bool needs_neighbor(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::MERGE_HEADWAY:
    case ConstraintTag::MERGE_BRAKE:
    case ConstraintTag::FOLLOW_HEADWAY:
    case ConstraintTag::FOLLOW_BRAKE:
      return true;
    default:
      return false;
  }
}

const NeighborView& require_neighbor(ConstraintTag tag, const NeighborView* nb) {
  if (nb == nullptr) {
    throw std::invalid_argument(std::string("barrier ") +
                                std::string(to_string(tag)) +
                                " requires a neighbor view");
  }
  return *nb;
}

}  // namespace

BarrierTerms barrier_terms(ConstraintTag tag, const VehicleState& ego,
                           const NeighborView* neighbor,
                           const ControllerConfig& cfg, const VehicleParams& p) {
  const double em = p.effective_mass();
  const double fr = resistance_force(ego.speed_mps, p);
  const double drag_accel = fr / em;  // deceleration from resistance alone
  const double v = ego.speed_mps;
  const double d = ego.position_m;
  const double k = cfg.time_headway_s / cfg.zone_length_m;

  BarrierTerms t;
  switch (tag) {
    case ConstraintTag::MAX_SPEED: {
      t.value = cfg.speed_max_mps - v;
      t.drift = drag_accel;
      t.input_coeff = -1.0 / em;
      return t;
    }
    case ConstraintTag::MIN_SPEED: {
      t.value = v - cfg.speed_min_mps;
      t.drift = -drag_accel;
      t.input_coeff = 1.0 / em;
      return t;
    }
    case ConstraintTag::MERGE_HEADWAY: {
      const NeighborView& nb = require_neighbor(tag, neighbor);
      // No direct input dependence: the row is a feasibility gate.
      t.value = nb.gap_m - cfg.min_gap_m - k * d * nb.speed_mps;
      t.drift = (nb.speed_mps - v) - k * nb.speed_mps * v;
      t.input_coeff = 0.0;
      return t;
    }
    case ConstraintTag::MERGE_BRAKE: {
      const NeighborView& nb = require_neighbor(tag, neighbor);
      const double b = 1.0 / (2.0 * cfg.accel_min_mps2);  // negative
      const double dv = nb.speed_mps - v;
      const double brake_reach = d - b * (v * v - nb.speed_mps * nb.speed_mps);
      t.value = nb.gap_m + b * dv * dv - cfg.min_gap_m - k * brake_reach * v;
      const double dS_dv = -2.0 * b * dv - k * d +
                           k * b * (3.0 * v * v - nb.speed_mps * nb.speed_mps);
      t.drift = dv - k * v * v - dS_dv * drag_accel;
      t.input_coeff = dS_dv / em;
      return t;
    }
    case ConstraintTag::FOLLOW_HEADWAY: {
      const NeighborView& nb = require_neighbor(tag, neighbor);
      t.value = nb.gap_m - cfg.min_gap_m - cfg.time_headway_s * nb.speed_mps;
      t.drift = nb.speed_mps - v;
      t.input_coeff = 0.0;
      return t;
    }
    case ConstraintTag::FOLLOW_BRAKE: {
      const NeighborView& nb = require_neighbor(tag, neighbor);
      const double b = 1.0 / (2.0 * cfg.accel_min_mps2);
      const double dv = nb.speed_mps - v;
      t.value = nb.gap_m + b * dv * dv - cfg.time_headway_s * v - cfg.min_gap_m;
      const double dS_dv = -2.0 * b * dv - cfg.time_headway_s;
      t.drift = dv - dS_dv * drag_accel;
      t.input_coeff = dS_dv / em;
      return t;
    }
    default:
      throw std::invalid_argument("barrier_terms: tag is not a safe-set tag");
  }
}

double barrier_value(ConstraintTag tag, const VehicleState& ego,
                     const NeighborView* neighbor, const ControllerConfig& cfg,
                     const VehicleParams& p) {
  if (!needs_neighbor(tag)) {
    return barrier_terms(tag, ego, nullptr, cfg, p).value;
  }
  return barrier_terms(tag, ego, neighbor, cfg, p).value;
}

LinearConstraint cbf_row_from_terms(ConstraintTag tag, const BarrierTerms& terms,
                                    double barrier_value_for_margin,
                                    const ControllerConfig& cfg) {
  const double s = barrier_value_for_margin;
  LinearConstraint row;
  row.tag = tag;
  row.coeff_u = -terms.input_coeff;
  row.coeff_theta = 0.0;
  row.bound = terms.drift + cfg.cbf_gamma * s * s * s;
  return row;
}

LinearConstraint cbf_row(ConstraintTag tag, const VehicleState& ego,
                         const NeighborView* neighbor,
                         const ControllerConfig& cfg, const VehicleParams& p) {
  const BarrierTerms terms = barrier_terms(tag, ego, neighbor, cfg, p);
  if (!(terms.value > 0.0)) {
    throw std::domain_error(std::string("cbf_row: state outside safe set ") +
                            std::string(to_string(tag)));
  }
  return cbf_row_from_terms(tag, terms, terms.value, cfg);
}

LinearConstraint clf_row(const VehicleState& ego, const ControllerConfig& cfg,
                         const VehicleParams& p) {
  const double em = p.effective_mass();
  const double fr = resistance_force(ego.speed_mps, p);
  const double dv = ego.speed_mps - cfg.speed_desired_mps;
  const double grad = 2.0 * dv / em;
  LinearConstraint row;
  row.tag = ConstraintTag::CLF;
  row.coeff_u = grad;
  row.coeff_theta = -1.0;
  row.bound = grad * fr - cfg.clf_rate * dv * dv;
  return row;
}

InputBounds input_bound_rows(const VehicleState& ego,
                             const ControllerConfig& cfg,
                             const VehicleParams& p) {
  const double em = p.effective_mass();
  const double fr = resistance_force(ego.speed_mps, p);
  InputBounds rows;
  rows.upper = {1.0, 0.0, em * cfg.accel_max_mps2 + fr, ConstraintTag::INPUT_MAX};
  rows.lower = {-1.0, 0.0, -(em * cfg.accel_min_mps2 + fr), ConstraintTag::INPUT_MIN};
  return rows;
}

}  // namespace cavmerge
