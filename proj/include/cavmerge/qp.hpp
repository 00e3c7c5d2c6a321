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

#include <vector>

#include "cavmerge/barriers.hpp"

namespace cavmerge {

// Strictly convex program in q = (u, theta):
//   minimize 0.5 * (quad_u * u^2 + quad_theta * theta^2) + lin_u * u + lin_theta * theta
//   subject to rows (coeff_u * u + coeff_theta * theta <= bound).
struct QpProblem {
  double quad_u = 1.0;      // must be positive
  double quad_theta = 1.0;  // must be positive
  double lin_u = 0.0;
  double lin_theta = 0.0;
  std::vector<LinearConstraint> rows;
};

enum class QpStatus { OPTIMAL, INFEASIBLE };

struct QpSolution {
  QpStatus status = QpStatus::INFEASIBLE;
  double u = 0.0;
  double theta = 0.0;
  double objective = 0.0;
  std::vector<ConstraintTag> active_set;  // rows tight at the solution
};

// Exact solve by enumerating the unconstrained minimizer and every single-row
// and pair-of-rows equality KKT candidate, then keeping the feasible candidate
// of least objective. Infeasibility is certified by eliminating theta
// (Fourier-Motzkin) and intersecting the remaining intervals on u.
//
// Feasibility uses a normalized tolerance of 1e-9 per row; every row of an
// OPTIMAL solution is satisfied to that tolerance. Deterministic: identical
// problems yield bitwise-identical solutions.
QpSolution solve(const QpProblem& problem);

}  // namespace cavmerge
