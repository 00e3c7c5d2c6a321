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
#include <string>
#include <vector>

#include "cavmerge/controller.hpp"
#include "cavmerge/traffic.hpp"

namespace cavmerge {

// Outcome of one oracle suite: worst-case numbers in `detail` so failures are
// actionable from the command line.
struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Swappable derivative provider so a deliberately broken implementation can
// prove the finite-difference suite has teeth.
using BarrierTermsFn = BarrierTerms (*)(ConstraintTag, const VehicleState&,
                                        const NeighborView*,
                                        const ControllerConfig&,
                                        const VehicleParams&);

// Central finite differences of S1..S6 and the speed-tracking function along
// short integrated trajectories (neighbor speed held), compared against the
// analytic drift/input decomposition at `cases` random states.
SuiteResult check_barrier_derivatives(std::uint64_t seed, int cases,
                                      BarrierTermsFn terms_fn = &barrier_terms);

// Exhaustive grid oracle over `cases` random controller-assembled programs:
// 0.5 N input pitch, 0.01 slack pitch, feasibility agreement, argmin proximity
// and a stationarity (KKT) residual bound on every optimal solution.
SuiteResult check_qp_grid(std::uint64_t seed, int cases);

// Scripted-lead self-consistency: the closed-form position differentiates to
// the closed-form speed, and the speed to the acceleration.
SuiteResult check_script_consistency();

// Observed convergence order of the fixed-step integrator under step halving
// (must be at least 3.5).
SuiteResult check_integrator_refinement();

// All four suites with default case counts.
std::vector<SuiteResult> run_validation_suites(std::uint64_t seed);

// Stationarity residual of (u, theta) for `problem`: the infinity norm of the
// objective gradient minus the best non-negative combination of tight-row
// normals. Near zero at a true optimum.
double kkt_residual(const QpProblem& problem, double u, double theta);

// Brute-force grid minimizer used as the solver oracle: exhaustive over the
// input axis, exact in the slack. The program is separable given the input,
// so the slack optimum on the row-induced interval is closed-form; keeping it
// exact (rather than on its own lattice) keeps the oracle's input error below
// one pitch, which is what the agreement tolerances assume.
struct GridSolution {
  bool feasible = false;
  double u = 0.0;
  double theta = 0.0;
  double objective = 0.0;
};
GridSolution grid_solve(const QpProblem& problem, double input_pitch_n = 0.5);

// Randomized mixed-traffic scenario for property suites: 2-8 vehicles,
// entry times and speeds drawn within the configured bounds, arrivals
// postponed in 0.5 s steps until every vehicle spawns strictly inside the
// safe set (an arrival inside another vehicle's unsafe set is ill-posed, not
// a controller failure). Deterministic in `seed`.
ScenarioSpec random_scenario(std::uint64_t seed);

}  // namespace cavmerge
