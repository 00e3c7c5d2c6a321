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

#include <string_view>

#include "cavmerge/dynamics.hpp"

namespace cavmerge {

// Controller tuning shared by every CAV in a scenario. SI units.
struct ControllerConfig {
  double time_headway_s = 1.8;       // steady car-following headway
  double min_gap_m = 0.0;            // standstill clearance added to every gap set
  double zone_length_m = 400.0;      // distance from zone entry to the merge point
  double clf_rate = 10.0;            // exponential speed-tracking rate
  double slack_weight = 10.0;        // quadratic penalty on the tracking slack
  double travel_time_weight = 0.0;   // reserved; not part of the per-step objective
  double cbf_gamma = 1.0;            // class-K gain on the cubic barrier margin
  double accel_min_mps2 = -3.0;
  double accel_max_mps2 = 3.0;
  double speed_min_mps = 0.0;
  double speed_max_mps = 33.0;
  double speed_desired_mps = 30.0;
  double sample_dt_s = 0.1;
  bool theta_nonnegative = false;    // optional explicit slack floor row

  // Throws std::invalid_argument on inconsistent bounds
  // (needs speed_min < speed_desired <= speed_max, accel_min < 0 < accel_max,
  //  positive headway/zone length/rates/dt, non-negative min_gap).
  void validate() const;
};

// Snapshot view of a neighbor used when building gap constraints: bumper gap
// to the neighbor and the neighbor's speed, both frozen at the sampling
// instant. Neighbor acceleration is treated as zero over the step.
struct NeighborView {
  double gap_m = 0.0;
  double speed_mps = 0.0;
};

// Row of the per-step program, in decision variables q = (u, theta):
//   coeff_u * u + coeff_theta * theta <= bound.
enum class ConstraintTag {
  MAX_SPEED,        // S1: v_max - v
  MIN_SPEED,        // S2: v - v_min
  MERGE_HEADWAY,    // S3: gap minus position-scaled headway on the merge leader
  MERGE_BRAKE,      // S4: S3 made robust to a full brake-to-match maneuver
  FOLLOW_HEADWAY,   // S5: gap minus constant headway on the lane leader
  FOLLOW_BRAKE,     // S6: S5 made robust to a full brake-to-match maneuver
  CLF,              // speed-tracking row, softened by the slack variable
  INPUT_MAX,        // wheel-force ceiling equivalent to accel_max
  INPUT_MIN,        // wheel-force floor equivalent to accel_min
  THETA_FLOOR,      // optional theta >= 0 row (config toggle)
};
std::string_view to_string(ConstraintTag tag);

struct LinearConstraint {
  double coeff_u = 0.0;
  double coeff_theta = 0.0;
  double bound = 0.0;
  ConstraintTag tag = ConstraintTag::CLF;
};

// Safe-set value for one tag. Gap-based tags (S3..S6) require a neighbor and
// throw std::invalid_argument without one; speed tags ignore it.
double barrier_value(ConstraintTag tag, const VehicleState& ego,
                     const NeighborView* neighbor, const ControllerConfig& cfg,
                     const VehicleParams& p);

// Affine decomposition of the safe-set derivative along the ego dynamics with
// the neighbor's speed frozen:  S_dot = drift + input_coeff * u.
struct BarrierTerms {
  double value = 0.0;
  double drift = 0.0;
  double input_coeff = 0.0;
};
BarrierTerms barrier_terms(ConstraintTag tag, const VehicleState& ego,
                           const NeighborView* neighbor,
                           const ControllerConfig& cfg, const VehicleParams& p);

// Barrier row enforcing S_dot >= -gamma * S^3 with the supplied (possibly
// clamped) barrier value. Rows for tags without input dependence degenerate
// to pure feasibility checks (coeff_u = 0).
LinearConstraint cbf_row_from_terms(ConstraintTag tag, const BarrierTerms& terms,
                                    double barrier_value_for_margin,
                                    const ControllerConfig& cfg);

// Convenience wrapper computing terms first; throws std::domain_error when the
// state already lies outside the safe set (callers that must keep running
// clamp the value and use cbf_row_from_terms instead).
LinearConstraint cbf_row(ConstraintTag tag, const VehicleState& ego,
                         const NeighborView* neighbor,
                         const ControllerConfig& cfg, const VehicleParams& p);

// Speed-tracking row on V = (v - v_d)^2:  V_dot + clf_rate * V <= theta.
LinearConstraint clf_row(const VehicleState& ego, const ControllerConfig& cfg,
                         const VehicleParams& p);

// Wheel-force box equivalent to the configured acceleration bounds at the
// current speed: one INPUT_MAX and one INPUT_MIN row.
struct InputBounds {
  LinearConstraint upper;
  LinearConstraint lower;
};
InputBounds input_bound_rows(const VehicleState& ego,
                             const ControllerConfig& cfg,
                             const VehicleParams& p);

// Position-scaled headway factor used by the merge constraints: grows
// linearly from 0 at zone entry to time_headway_s at the merge point.
double merge_headway_factor(double position_m, const ControllerConfig& cfg);

}  // namespace cavmerge
