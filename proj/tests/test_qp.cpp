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

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "cavmerge/controller.hpp"
#include "cavmerge/qp.hpp"
#include "cavmerge/validation.hpp"
#include "doctest.h"

using namespace cavmerge;

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

// Random controller-shaped program; mirrors the production sampler without
// depending on it.
QpProblem random_program(std::mt19937_64& rng) {
  const auto unif = [&](double lo, double hi) {
    return lo + static_cast<double>(rng() >> 11) * 0x1.0p-53 * (hi - lo);
  };
  const ControllerConfig cfg;
  const VehicleParams p;
  VehicleState ego;
  ego.klass = VehicleClass::CAV;
  ego.position_m = unif(0.0, cfg.zone_length_m);
  ego.speed_mps = unif(0.0, cfg.speed_max_mps);
  ControlNeighbors nb;
  if (unif(0.0, 1.0) < 0.8)
    nb.merge_leader = NeighborView{unif(0.5, 120.0), unif(0.0, cfg.speed_max_mps)};
  if (unif(0.0, 1.0) < 0.7)
    nb.lane_leader = NeighborView{unif(0.5, 120.0), unif(0.0, cfg.speed_max_mps)};
  return build_control_program(ego, nb, cfg, p);
}

double row_violation(const QpProblem& qp, double u, double theta) {
  double worst = 0.0;
  for (const LinearConstraint& row : qp.rows) {
    const double scale =
        std::max({std::abs(row.coeff_u), std::abs(row.coeff_theta), 1.0});
    worst = std::max(
        worst, (row.coeff_u * u + row.coeff_theta * theta - row.bound) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("the unconstrained minimizer matches the closed form") {
  const VehicleParams p;
  QpProblem qp;
  qp.quad_u = 2.0 * p.input_loss_coeff();
  qp.quad_theta = 20.0;
  qp.lin_u = 20.0;
  const QpSolution sol = solve(qp);
  REQUIRE(sol.status == QpStatus::OPTIMAL);
  CHECK(sol.u == doctest::Approx(-20.0 / qp.quad_u).epsilon(1e-12));
  CHECK(sol.u == doctest::Approx(-9323.3).epsilon(1e-4));
  CHECK(sol.theta == 0.0);
  CHECK(sol.active_set.empty());
}

TEST_CASE("a point feasible set forces the solution onto it") {
  QpProblem qp;
  qp.lin_u = 20.0;
  qp.rows.push_back({1.0, 0.0, 0.0, ConstraintTag::INPUT_MAX});
  qp.rows.push_back({-1.0, 0.0, 0.0, ConstraintTag::INPUT_MIN});
  const QpSolution sol = solve(qp);
  REQUIRE(sol.status == QpStatus::OPTIMAL);
  CHECK(std::abs(sol.u) <= 1e-9);
}

TEST_CASE("contradictory input rows certify infeasibility") {
  QpProblem qp;
  qp.rows.push_back({1.0, 0.0, -1e6, ConstraintTag::INPUT_MAX});   // u <= -1e6
  qp.rows.push_back({-1.0, 0.0, -1e6, ConstraintTag::INPUT_MIN});  // u >= 1e6
  CHECK(solve(qp).status == QpStatus::INFEASIBLE);
}

TEST_CASE("contradictory slack rows certify infeasibility") {
  QpProblem qp;
  qp.rows.push_back({0.0, 1.0, -5.0, ConstraintTag::CLF});          // theta <= -5
  qp.rows.push_back({0.0, -1.0, 4.0, ConstraintTag::THETA_FLOOR});  // theta >= -4
  CHECK(solve(qp).status == QpStatus::INFEASIBLE);
}

TEST_CASE("a zero-coefficient row with negative bound is trivially empty") {
  QpProblem qp;
  qp.rows.push_back({0.0, 0.0, -1.0, ConstraintTag::FOLLOW_HEADWAY});
  CHECK(solve(qp).status == QpStatus::INFEASIBLE);
}

TEST_CASE("coupled rows are resolved through the pairwise candidates") {
  // minimize 0.5(u^2 + theta^2) + (-4)u subject to u + theta <= 2, u <= 3.
  QpProblem qp;
  qp.quad_u = 1.0;
  qp.quad_theta = 1.0;
  qp.lin_u = -4.0;
  qp.rows.push_back({1.0, 1.0, 2.0, ConstraintTag::CLF});
  qp.rows.push_back({1.0, 0.0, 3.0, ConstraintTag::INPUT_MAX});
  const QpSolution sol = solve(qp);
  REQUIRE(sol.status == QpStatus::OPTIMAL);
  // Stationarity on the tight first row: u - 4 = theta, u + theta = 2 -> u = 3.
  // The second row caps u at 3 simultaneously; minimizer sits at (3, -1).
  CHECK(sol.u == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(sol.theta == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("identical problems produce bitwise-identical solutions") {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 50; ++c) {
    const QpProblem qp = random_program(rng);
    const QpSolution a = solve(qp);
    const QpSolution b = solve(qp);
    CHECK(a.status == b.status);
    CHECK(bits(a.u) == bits(b.u));
    CHECK(bits(a.theta) == bits(b.theta));
    CHECK(bits(a.objective) == bits(b.objective));
    CHECK(a.active_set == b.active_set);
  }
}

TEST_CASE("optimal solutions satisfy every row to the normalized tolerance") {
  std::mt19937_64 rng(11);
  int optimal = 0;
  for (int c = 0; c < 200; ++c) {
    const QpProblem qp = random_program(rng);
    const QpSolution sol = solve(qp);
    if (sol.status != QpStatus::OPTIMAL) continue;
    ++optimal;
    CHECK(row_violation(qp, sol.u, sol.theta) <= 1e-9);
    CHECK(kkt_residual(qp, sol.u, sol.theta) <= 1e-8);
  }
  CHECK(optimal > 100);  // the sampler must actually exercise the solver
}

TEST_CASE("adding a row never decreases the optimal objective") {
  std::mt19937_64 rng(13);
  for (int c = 0; c < 100; ++c) {
    QpProblem qp = random_program(rng);
    const QpSolution before = solve(qp);
    if (before.status != QpStatus::OPTIMAL) continue;
    // Cut through the current solution so the row is guaranteed active.
    qp.rows.push_back(
        {1.0, 0.0, before.u - std::abs(before.u) * 0.01 - 1.0, ConstraintTag::INPUT_MAX});
    const QpSolution after = solve(qp);
    if (after.status != QpStatus::OPTIMAL) continue;
    CHECK(after.objective >= before.objective - 1e-9);
  }
}

TEST_CASE("rescaling the input units leaves the physical optimum unchanged") {
  std::mt19937_64 rng(17);
  for (int c = 0; c < 50; ++c) {
    const QpProblem qp = random_program(rng);
    QpProblem scaled = qp;  // decision in kilonewtons
    scaled.quad_u *= 1e6;
    scaled.lin_u *= 1e3;
    for (LinearConstraint& row : scaled.rows) row.coeff_u *= 1e3;

    const QpSolution a = solve(qp);
    const QpSolution b = solve(scaled);
    REQUIRE(a.status == b.status);
    if (a.status != QpStatus::OPTIMAL) continue;
    CHECK(b.u * 1e3 ==
          doctest::Approx(a.u).epsilon(1e-9).scale(std::max(1.0, std::abs(a.u))));
    CHECK(b.theta == doctest::Approx(a.theta)
                         .epsilon(1e-9)
                         .scale(std::max(1.0, std::abs(a.theta))));
  }
}

TEST_CASE("the solver agrees with the brute-force grid oracle") {
  const SuiteResult suite = check_qp_grid(123, 100);
  INFO(suite.detail);
  CHECK(suite.passed);
}
