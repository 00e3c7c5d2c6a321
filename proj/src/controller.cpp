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

#include "cavmerge/controller.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace cavmerge {

namespace {

// Margin substituted for a non-positive barrier so its row keeps a defined
// right-hand side while the violation is surfaced to the caller.
constexpr double kBarrierClampMargin = 1e-6;

constexpr std::size_t slot_of(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::MAX_SPEED: return 0;
    case ConstraintTag::MIN_SPEED: return 1;
    case ConstraintTag::MERGE_HEADWAY: return 2;
    case ConstraintTag::MERGE_BRAKE: return 3;
    case ConstraintTag::FOLLOW_HEADWAY: return 4;
    case ConstraintTag::FOLLOW_BRAKE: return 5;
    default: return kBarrierSlots;  // no slot
  }
}

void append_barrier_row(QpProblem& qp, ConstraintTag tag, const VehicleState& ego,
                        const NeighborView* neighbor, const ControllerConfig& cfg,
                        const VehicleParams& p, std::vector<ConstraintTag>* clamped,
                        std::array<double, kBarrierSlots>* barrier_values) {
  const BarrierTerms terms = barrier_terms(tag, ego, neighbor, cfg, p);
  if (barrier_values != nullptr) (*barrier_values)[slot_of(tag)] = terms.value;
  double margin_value = terms.value;
  if (!(margin_value > 0.0)) {
    margin_value = kBarrierClampMargin;
    if (clamped != nullptr) clamped->push_back(tag);
  }
  qp.rows.push_back(cbf_row_from_terms(tag, terms, margin_value, cfg));
}

}  // namespace

QpProblem build_control_program(const VehicleState& ego,
                                const ControlNeighbors& neighbors,
                                const ControllerConfig& cfg, const VehicleParams& p,
                                std::vector<ConstraintTag>* clamped,
                                std::array<double, kBarrierSlots>* barrier_values) {
  if (barrier_values != nullptr)
    barrier_values->fill(std::numeric_limits<double>::quiet_NaN());

  QpProblem qp;
  qp.quad_u = 2.0 * p.input_loss_coeff();
  qp.quad_theta = 2.0 * cfg.slack_weight;
  qp.lin_u = ego.speed_mps;
  qp.lin_theta = 0.0;

  append_barrier_row(qp, ConstraintTag::MAX_SPEED, ego, nullptr, cfg, p, clamped,
                     barrier_values);
  append_barrier_row(qp, ConstraintTag::MIN_SPEED, ego, nullptr, cfg, p, clamped,
                     barrier_values);
  if (neighbors.merge_leader) {
    append_barrier_row(qp, ConstraintTag::MERGE_HEADWAY, ego,
                       &*neighbors.merge_leader, cfg, p, clamped, barrier_values);
    append_barrier_row(qp, ConstraintTag::MERGE_BRAKE, ego,
                       &*neighbors.merge_leader, cfg, p, clamped, barrier_values);
  }
  if (neighbors.lane_leader) {
    append_barrier_row(qp, ConstraintTag::FOLLOW_HEADWAY, ego,
                       &*neighbors.lane_leader, cfg, p, clamped, barrier_values);
    append_barrier_row(qp, ConstraintTag::FOLLOW_BRAKE, ego,
                       &*neighbors.lane_leader, cfg, p, clamped, barrier_values);
  }
  qp.rows.push_back(clf_row(ego, cfg, p));
  const InputBounds box = input_bound_rows(ego, cfg, p);
  qp.rows.push_back(box.upper);
  qp.rows.push_back(box.lower);
  if (cfg.theta_nonnegative)
    qp.rows.push_back({0.0, -1.0, 0.0, ConstraintTag::THETA_FLOOR});
  return qp;
}

double fallback_brake_input(const VehicleState& ego, const ControllerConfig& cfg,
                            const VehicleParams& p) {
  return p.effective_mass() * cfg.accel_min_mps2 +
         resistance_force(ego.speed_mps, p);
}

ControlDecision decide(const VehicleState& ego, const ControlNeighbors& neighbors,
                       const ControllerConfig& cfg, const VehicleParams& p) {
  ControlDecision out;
  const auto t0 = std::chrono::steady_clock::now();
  const QpProblem qp =
      build_control_program(ego, neighbors, cfg, p, &out.clamped, &out.barrier_values);
  const QpSolution sol = solve(qp);
  if (sol.status == QpStatus::OPTIMAL) {
    out.input_n = sol.u;
    out.theta = sol.theta;
    out.objective = sol.objective;
    out.active_set = sol.active_set;
  } else {
    out.fallback = true;
    out.input_n = fallback_brake_input(ego, cfg, p);
    out.theta = std::numeric_limits<double>::quiet_NaN();
    out.objective = std::numeric_limits<double>::quiet_NaN();
  }
  out.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace cavmerge
