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

#include <cmath>
#include <stdexcept>

#include "cavmerge/barriers.hpp"
#include "doctest.h"

using namespace cavmerge;

namespace {

VehicleState ego_at(double position_m, double speed_mps) {
  VehicleState s;
  s.klass = VehicleClass::CAV;
  s.position_m = position_m;
  s.speed_mps = speed_mps;
  return s;
}

}  // namespace

TEST_CASE("controller config validation rejects inconsistent bounds") {
  ControllerConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  cfg = ControllerConfig{};
  cfg.accel_min_mps2 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = ControllerConfig{};
  cfg.speed_desired_mps = cfg.speed_max_mps + 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = ControllerConfig{};
  cfg.speed_min_mps = cfg.speed_desired_mps;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = ControllerConfig{};
  cfg.time_headway_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = ControllerConfig{};
  cfg.sample_dt_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = ControllerConfig{};
  cfg.min_gap_m = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("the merge headway factor ramps linearly across the zone") {
  const ControllerConfig cfg;  // headway 1.8 s over 400 m
  CHECK(merge_headway_factor(0.0, cfg) == 0.0);
  CHECK(merge_headway_factor(cfg.zone_length_m, cfg) ==
        doctest::Approx(cfg.time_headway_s).epsilon(1e-15));
  CHECK(merge_headway_factor(200.0, cfg) == doctest::Approx(0.9).epsilon(1e-15));
  double prev = -1.0;
  for (double d = 0.0; d <= cfg.zone_length_m; d += 25.0) {
    const double f = merge_headway_factor(d, cfg);
    CHECK(f > prev);
    CHECK(f == doctest::Approx(cfg.time_headway_s * d / cfg.zone_length_m)
                   .epsilon(1e-15));
    prev = f;
  }
}

TEST_CASE("safe-set values match hand evaluation per tag") {
  const ControllerConfig cfg;
  const VehicleParams p;

  CHECK(barrier_value(ConstraintTag::MAX_SPEED, ego_at(0.0, 20.0), nullptr, cfg, p) ==
        doctest::Approx(13.0).epsilon(1e-15));
  CHECK(barrier_value(ConstraintTag::MIN_SPEED, ego_at(0.0, 20.0), nullptr, cfg, p) ==
        doctest::Approx(20.0).epsilon(1e-15));

  const NeighborView mid{50.0, 20.0};
  // Position-scaled headway: 1.8 * 200/400 * 20 = 18.
  CHECK(barrier_value(ConstraintTag::MERGE_HEADWAY, ego_at(200.0, 20.0), &mid, cfg,
                      p) == doctest::Approx(32.0).epsilon(1e-15));
  // Constant headway: 50 - 1.8 * 20 = 14; equal speeds kill the braking term.
  CHECK(barrier_value(ConstraintTag::FOLLOW_HEADWAY, ego_at(200.0, 20.0), &mid, cfg,
                      p) == doctest::Approx(14.0).epsilon(1e-15));
  CHECK(barrier_value(ConstraintTag::FOLLOW_BRAKE, ego_at(200.0, 20.0), &mid, cfg,
                      p) == doctest::Approx(14.0).epsilon(1e-15));

  // Distinct speeds: 40 + (18-22)^2/(2*-3) - 0.0045*(100 - (22^2-18^2)/(2*-3))*22.
  const NeighborView slower{40.0, 18.0};
  CHECK(barrier_value(ConstraintTag::MERGE_BRAKE, ego_at(100.0, 22.0), &slower, cfg,
                      p) == doctest::Approx(24.793333333333333).epsilon(1e-12));
  // 40 + 16/(-6) - 1.8*22.
  CHECK(barrier_value(ConstraintTag::FOLLOW_BRAKE, ego_at(100.0, 22.0), &slower, cfg,
                      p) == doctest::Approx(-2.2666666666666666).epsilon(1e-12));
}

TEST_CASE("braking-aware values collapse to their headway forms at equal speeds") {
  const ControllerConfig cfg;
  const VehicleParams p;
  for (double v = 2.0; v <= 30.0; v += 7.0) {
    for (double d = 10.0; d < cfg.zone_length_m; d += 130.0) {
      const NeighborView nb{35.0 + d / 10.0, v};
      const VehicleState ego = ego_at(d, v);
      CHECK(barrier_value(ConstraintTag::MERGE_BRAKE, ego, &nb, cfg, p) ==
            doctest::Approx(barrier_value(ConstraintTag::MERGE_HEADWAY, ego, &nb,
                                          cfg, p))
                .epsilon(1e-14));
      CHECK(barrier_value(ConstraintTag::FOLLOW_BRAKE, ego, &nb, cfg, p) ==
            doctest::Approx(barrier_value(ConstraintTag::FOLLOW_HEADWAY, ego, &nb,
                                          cfg, p))
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("gap-based tags require a neighbor and speed tags ignore one") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const VehicleState ego = ego_at(100.0, 20.0);
  CHECK_THROWS_AS(barrier_value(ConstraintTag::MERGE_HEADWAY, ego, nullptr, cfg, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(barrier_value(ConstraintTag::FOLLOW_BRAKE, ego, nullptr, cfg, p),
                  std::invalid_argument);
  const NeighborView nb{50.0, 20.0};
  CHECK(barrier_value(ConstraintTag::MAX_SPEED, ego, &nb, cfg, p) ==
        barrier_value(ConstraintTag::MAX_SPEED, ego, nullptr, cfg, p));
}

TEST_CASE("derivative decompositions carry the expected structure") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const VehicleState ego = ego_at(150.0, 22.0);
  const NeighborView nb{60.0, 18.0};
  const double em = p.effective_mass();
  const double fr = resistance_force(22.0, p);

  const BarrierTerms s1 = barrier_terms(ConstraintTag::MAX_SPEED, ego, nullptr, cfg, p);
  CHECK(s1.input_coeff == doctest::Approx(-1.0 / em).epsilon(1e-15));
  CHECK(s1.drift == doctest::Approx(fr / em).epsilon(1e-12));

  const BarrierTerms s2 = barrier_terms(ConstraintTag::MIN_SPEED, ego, nullptr, cfg, p);
  CHECK(s2.input_coeff == doctest::Approx(1.0 / em).epsilon(1e-15));
  CHECK(s2.drift == doctest::Approx(-fr / em).epsilon(1e-12));

  // Neither headway value contains the ego speed, so neither has input reach.
  const BarrierTerms s3 = barrier_terms(ConstraintTag::MERGE_HEADWAY, ego, &nb, cfg, p);
  CHECK(s3.input_coeff == 0.0);
  CHECK(s3.drift ==
        doctest::Approx((nb.speed_mps - ego.speed_mps) -
                        (cfg.time_headway_s / cfg.zone_length_m) * ego.speed_mps *
                            nb.speed_mps)
            .epsilon(1e-12));

  const BarrierTerms s5 = barrier_terms(ConstraintTag::FOLLOW_HEADWAY, ego, &nb, cfg, p);
  CHECK(s5.input_coeff == 0.0);
  CHECK(s5.drift == doctest::Approx(nb.speed_mps - ego.speed_mps).epsilon(1e-15));

  // The braking-aware forms depend on ego speed and regain input reach.
  const BarrierTerms s4 = barrier_terms(ConstraintTag::MERGE_BRAKE, ego, &nb, cfg, p);
  CHECK(s4.input_coeff != 0.0);
  const BarrierTerms s6 = barrier_terms(ConstraintTag::FOLLOW_BRAKE, ego, &nb, cfg, p);
  CHECK(s6.input_coeff != 0.0);
}

TEST_CASE("the max-speed barrier row caps the input at the cubic margin") {
  const ControllerConfig cfg;  // v_max 33, gamma 1
  const VehicleParams p;
  const LinearConstraint row =
      cbf_row(ConstraintTag::MAX_SPEED, ego_at(0.0, 25.0), nullptr, cfg, p);
  CHECK(row.tag == ConstraintTag::MAX_SPEED);
  CHECK(row.coeff_u > 0.0);
  CHECK(row.coeff_theta == 0.0);
  // u <= F_r(25) + 8^3 * effective mass.
  const double implied = row.bound / row.coeff_u;
  CHECK(implied ==
        doctest::Approx(resistance_force(25.0, p) + 512.0 * p.effective_mass())
            .epsilon(1e-12));
}

TEST_CASE("headway rows without input reach degenerate to state conditions") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const NeighborView nb{60.0, 18.0};
  const LinearConstraint row =
      cbf_row(ConstraintTag::FOLLOW_HEADWAY, ego_at(150.0, 22.0), &nb, cfg, p);
  CHECK(row.coeff_u == 0.0);
  CHECK(row.coeff_theta == 0.0);
  const double s = 60.0 - 1.8 * 18.0;  // 27.6
  CHECK(row.bound ==
        doctest::Approx((18.0 - 22.0) + cfg.cbf_gamma * s * s * s).epsilon(1e-12));
}

TEST_CASE("barrier rows go inactive far from the boundary") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const NeighborView far{500.0, 20.0};
  const LinearConstraint row =
      cbf_row(ConstraintTag::FOLLOW_HEADWAY, ego_at(10.0, 20.0), &far, cfg, p);
  CHECK(row.bound > 1e6);  // gamma * S^3 dominates
}

TEST_CASE("building a row outside the safe set is a contract violation") {
  const ControllerConfig cfg;
  const VehicleParams p;
  CHECK_THROWS_AS(
      cbf_row(ConstraintTag::MAX_SPEED, ego_at(0.0, 34.0), nullptr, cfg, p),
      std::domain_error);
  const NeighborView tight{1.0, 20.0};
  CHECK_THROWS_AS(
      cbf_row(ConstraintTag::FOLLOW_HEADWAY, ego_at(0.0, 20.0), &tight, cfg, p),
      std::domain_error);
}

TEST_CASE("a clamped margin keeps violated rows constructible") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const NeighborView tight{1.0, 20.0};
  const VehicleState ego = ego_at(100.0, 20.0);
  const BarrierTerms terms =
      barrier_terms(ConstraintTag::FOLLOW_HEADWAY, ego, &tight, cfg, p);
  CHECK(terms.value < 0.0);
  const LinearConstraint row =
      cbf_row_from_terms(ConstraintTag::FOLLOW_HEADWAY, terms, 1e-6, cfg);
  CHECK(row.tag == ConstraintTag::FOLLOW_HEADWAY);
  CHECK(row.coeff_u == 0.0);
  CHECK(row.bound == doctest::Approx(terms.drift).epsilon(1e-9));
}

TEST_CASE("the tracking row matches hand evaluation and vanishes at target speed") {
  ControllerConfig cfg;
  cfg.clf_rate = 10.0;
  const VehicleParams p;

  const LinearConstraint at_target = clf_row(ego_at(0.0, cfg.speed_desired_mps), cfg, p);
  CHECK(at_target.tag == ConstraintTag::CLF);
  CHECK(at_target.coeff_u == 0.0);
  CHECK(at_target.coeff_theta == -1.0);
  CHECK(at_target.bound == 0.0);

  const LinearConstraint near = clf_row(ego_at(0.0, 29.0), cfg, p);
  const double grad = 2.0 * (29.0 - 30.0) / p.effective_mass();
  CHECK(near.coeff_u == doctest::Approx(grad).epsilon(1e-12));
  CHECK(near.coeff_u == doctest::Approx(-9.539e-4).epsilon(1e-3));
  CHECK(near.coeff_theta == -1.0);
  CHECK(near.bound ==
        doctest::Approx(grad * resistance_force(29.0, p) - 10.0).epsilon(1e-12));
}

TEST_CASE("input bounds equal effective mass times the acceleration box") {
  const ControllerConfig cfg;  // accel in [-3, 3]
  const VehicleParams p;
  const InputBounds box = input_bound_rows(ego_at(0.0, 20.0), cfg, p);
  CHECK(box.upper.tag == ConstraintTag::INPUT_MAX);
  CHECK(box.lower.tag == ConstraintTag::INPUT_MIN);
  CHECK(box.upper.coeff_u == 1.0);
  CHECK(box.lower.coeff_u == -1.0);
  CHECK(box.upper.bound == doctest::Approx(6652.35684).epsilon(1e-12));
  CHECK(box.lower.bound == doctest::Approx(5928.74316).epsilon(1e-12));
}

TEST_CASE("a zero-acceleration corridor collapses the box onto the hold force") {
  ControllerConfig cfg;
  cfg.accel_min_mps2 = 0.0;  // deliberately unvalidated corner
  cfg.accel_max_mps2 = 0.0;
  const VehicleParams p;
  const InputBounds box = input_bound_rows(ego_at(0.0, 20.0), cfg, p);
  const double hold = resistance_force(20.0, p);
  CHECK(box.upper.bound == doctest::Approx(hold).epsilon(1e-15));
  CHECK(box.lower.bound == doctest::Approx(-hold).epsilon(1e-15));
}

TEST_CASE("riding the max-speed row keeps its safe set forward-invariant") {
  const ControllerConfig cfg;
  const VehicleParams p;
  const double dt = 1e-3;
  double pos = 0.0;
  double speed = 32.9;  // 0.1 m/s inside the boundary
  for (int k = 0; k < 10000; ++k) {
    VehicleState ego = ego_at(pos, speed);
    const double s = barrier_value(ConstraintTag::MAX_SPEED, ego, nullptr, cfg, p);
    REQUIRE(s >= -1e-6);
    const LinearConstraint row =
        cbf_row_from_terms(ConstraintTag::MAX_SPEED,
                           barrier_terms(ConstraintTag::MAX_SPEED, ego, nullptr,
                                         cfg, p),
                           std::max(s, 1e-9), cfg);
    // Most aggressive admissible choice: sit exactly on the row.
    const double u = row.bound / row.coeff_u;
    const StepResult step = integrate_step(pos, speed, u, dt, p);
    pos = step.position_m;
    speed = step.speed_mps;
  }
  CHECK(cfg.speed_max_mps - speed >= -1e-6);
}
