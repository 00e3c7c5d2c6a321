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

#include "cavmerge/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cavmerge {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kActiveTol = 1e-7;
constexpr double kParallelTol = 1e-12;

double row_scale(const LinearConstraint& r) {
  double s = std::abs(r.coeff_u);
  if (std::abs(r.coeff_theta) > s) s = std::abs(r.coeff_theta);
  return s > 1.0 ? s : 1.0;
}

bool feasible(const QpProblem& p, double u, double theta, double tol) {
  for (const auto& r : p.rows) {
    const double resid = r.coeff_u * u + r.coeff_theta * theta - r.bound;
    if (resid > tol * row_scale(r)) return false;
  }
  return true;
}

double objective(const QpProblem& p, double u, double theta) {
  return 0.5 * (p.quad_u * u * u + p.quad_theta * theta * theta) +
         p.lin_u * u + p.lin_theta * theta;
}

struct Candidate {
  double u;
  double theta;
};

// Minimizer subject to one equality row: stationarity L q + l + lambda a = 0.
bool single_row_candidate(const QpProblem& p, const LinearConstraint& r,
                          Candidate& out) {
  const double au = r.coeff_u, at = r.coeff_theta;
  const double denom = au * au / p.quad_u + at * at / p.quad_theta;
  if (denom <= 0.0) return false;
  const double lambda =
      -(r.bound + au * p.lin_u / p.quad_u + at * p.lin_theta / p.quad_theta) / denom;
  out.u = -(p.lin_u + lambda * au) / p.quad_u;
  out.theta = -(p.lin_theta + lambda * at) / p.quad_theta;
  return true;
}

bool pair_candidate(const LinearConstraint& a, const LinearConstraint& b,
                    Candidate& out) {
  const double det = a.coeff_u * b.coeff_theta - b.coeff_u * a.coeff_theta;
  const double scale = row_scale(a) * row_scale(b);
  if (std::abs(det) <= kParallelTol * scale) return false;
  out.u = (a.bound * b.coeff_theta - b.bound * a.coeff_theta) / det;
  out.theta = (a.coeff_u * b.bound - b.coeff_u * a.bound) / det;
  return true;
}

// Emptiness test for the row polygon: eliminate theta, then intersect the
// resulting half-lines on u.
bool polygon_nonempty(const QpProblem& p) {
  double u_lo = -std::numeric_limits<double>::infinity();
  double u_hi = std::numeric_limits<double>::infinity();

  std::vector<const LinearConstraint*> theta_up;    // coeff_theta > 0
  std::vector<const LinearConstraint*> theta_down;  // coeff_theta < 0

  auto apply_u_row = [&](double cu, double bound) -> bool {
    // cu * u <= bound
    if (std::abs(cu) <= kParallelTol) return bound >= -kFeasTol;
    if (cu > 0.0) {
      const double hi = bound / cu;
      if (hi < u_hi) u_hi = hi;
    } else {
      const double lo = bound / cu;
      if (lo > u_lo) u_lo = lo;
    }
    return true;
  };

  for (const auto& r : p.rows) {
    const double scale = row_scale(r);
    if (std::abs(r.coeff_theta) <= kParallelTol * scale) {
      if (!apply_u_row(r.coeff_u, r.bound + kFeasTol * scale)) return false;
    } else if (r.coeff_theta > 0.0) {
      theta_up.push_back(&r);
    } else {
      theta_down.push_back(&r);
    }
  }

  // Each (upper, lower) theta pair projects to an inequality purely in u.
  for (const auto* up : theta_up) {
    for (const auto* down : theta_down) {
      // theta <= (b_up - cu_up u)/ct_up and theta >= (b_dn - cu_dn u)/ct_dn
      const double cu = down->coeff_u / down->coeff_theta - up->coeff_u / up->coeff_theta;
      const double bound = down->bound / down->coeff_theta - up->bound / up->coeff_theta;
      // Combined requirement: cu * u <= bound  (after dividing by signs).
      const double scale = std::abs(cu) > 1.0 ? std::abs(cu) : 1.0;
      if (!apply_u_row(-cu, -bound + kFeasTol * scale)) return false;
    }
  }
  return u_lo <= u_hi + kFeasTol;
}

}  // namespace

QpSolution solve(const QpProblem& p) {
  if (!(p.quad_u > 0.0) || !(p.quad_theta > 0.0)) {
    throw std::invalid_argument("qp solve: quadratic diagonal must be positive");
  }

  const std::size_t n = p.rows.size();
  QpSolution best;
  best.status = QpStatus::INFEASIBLE;
  double best_obj = std::numeric_limits<double>::infinity();

  auto consider = [&](const Candidate& c, double tol) {
    if (!feasible(p, c.u, c.theta, tol)) return;
    const double obj = objective(p, c.u, c.theta);
    if (obj < best_obj) {
      best_obj = obj;
      best.u = c.u;
      best.theta = c.theta;
      best.status = QpStatus::OPTIMAL;
    }
  };

  auto enumerate = [&](double tol) {
    consider({-p.lin_u / p.quad_u, -p.lin_theta / p.quad_theta}, tol);
    Candidate c;
    for (std::size_t i = 0; i < n; ++i) {
      if (single_row_candidate(p, p.rows[i], c)) consider(c, tol);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (pair_candidate(p.rows[i], p.rows[j], c)) consider(c, tol);
      }
    }
  };

  enumerate(kFeasTol);
  if (best.status == QpStatus::INFEASIBLE) {
    if (!polygon_nonempty(p)) return best;
    // Numerically thin feasible set: retry with a looser filter before giving up.
    enumerate(1e-7);
    if (best.status == QpStatus::INFEASIBLE) return best;
  }

  best.objective = best_obj;
  for (const auto& r : p.rows) {
    const double resid = r.coeff_u * best.u + r.coeff_theta * best.theta - r.bound;
    if (std::abs(resid) <= kActiveTol * row_scale(r)) {
      best.active_set.push_back(r.tag);
    }
  }
  return best;
}

}  // namespace cavmerge
