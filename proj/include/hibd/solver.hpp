/*
 * Copyright 2026 The hibd Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hibd/hier.hpp"
#include "hibd/lifted.hpp"

namespace hibd {

// Relative Frobenius error below which a recovery counts as exact.
inline constexpr double kRecoveryThreshold = 1e-6;

struct SolverConfig {
  int max_outer_iters = 25;
  double outer_tol = 1e-6;               // on ||w^{k+1} - w^k||
  double cg_tol = 1e-4;                  // relative to ||y||
  int cg_max_iters = 100;
  double final_ls_tol = 3.1622776601683795e-7;  // 10^-6.5
  int final_ls_max_iters = 200;

  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct CgResult {
  Eigen::VectorXd z;       // coefficients on the support, in support order
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;  // residual reached the tolerance
  bool stationary = false; // normal equations solved before the tolerance was met
  bool breakdown = false;  // zero-curvature search direction
};

// Least squares min ||y - op z|| over supp(z) in omega by conjugate gradients
// on the restricted normal equations (CGLS). Stops once
// ||y - op z|| <= tol * ||y|| (absolute when y == 0), after max_iters, or on
// breakdown. `warm` (length |omega|) is the starting point.
CgResult cg_restricted(const LinearOperator& op, const Eigen::VectorXd& y, const HierSupport& omega,
                       double tol, int max_iters, const std::optional<Eigen::VectorXd>& warm = std::nullopt);

struct SolveResult {
  HierSignal estimate;
  HierSupport support;
  int outer_iters = 0;
  bool converged = false;
  std::vector<double> residual_norms;  // ||y - op w^k||, one per outer iteration
  CgResult final_ls;
};

// Hierarchical hard thresholding pursuit. Starting from w = 0, each outer
// iteration thresholds w + op*(y - op w) onto the pattern and re-solves the
// least-squares problem on the resulting support (warm-started from the
// current iterate). Stops once consecutive iterates differ by less than
// outer_tol, then re-solves on the last support at final_ls_tol.
// Throws NumericError if a non-finite value appears.
SolveResult hihtp(const LinearOperator& op, const Eigen::VectorXd& y, const SparsityPattern& p,
                  const SolverConfig& cfg = {});

// Same algorithm on a demixing operator; `p` must carry the user budget S.
SolveResult hihtp_three_level(const DemixingOperator& op, const Eigen::VectorXd& y, const SparsityPattern& p,
                              const SolverConfig& cfg = {});

double relative_error(const HierSignal& estimate, const HierSignal& truth);

}  // namespace hibd
