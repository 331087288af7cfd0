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

// Desk-scale diagnostics for restricted isometry constants.
//
// The (hierarchical) RIP constant of an operator is
//   delta = sup |‖op w‖^2 - ‖w‖^2|  over unit-norm pattern-sparse w,
// i.e. the largest deviation from 1 of an eigenvalue of op_Ω^T op_Ω over all
// maximal supports Ω.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "hibd/ensembles.hpp"
#include "hibd/hier.hpp"
#include "hibd/lifted.hpp"

namespace hibd {

struct RipEstimate {
  SparsityPattern pattern;
  int trials = 0;
  double delta_lower = 0.0;  // Monte Carlo lower bound
  std::optional<double> exact;
  std::uint64_t seed = 0;
};

// Max of |‖op w‖^2 - 1| over `trials` random unit-norm pattern-sparse w.
// Trial t draws from stream derive_seed(seed, {t}), so the estimate is
// non-decreasing in `trials`.
RipEstimate estimate_hirip_mc(const LinearOperator& op, const SparsityPattern& p, int trials, std::uint64_t seed);

// Exact constant by enumerating every maximal support. Refuses with
// GuardExceeded when (#supports) * |Ω|^3 exceeds `guard`.
double exact_hirip_small(const LinearOperator& op, const SparsityPattern& p, double guard = 1e8);

// max(λ_max - 1, 1 - λ_min) of a symmetric Gram matrix.
double gram_deviation(const Eigen::MatrixXd& gram);

struct FactorizationReport {
  double delta_h = 0.0;      // δ_{s,σ}(H) with Q = U A
  double delta_a = 0.0;      // δ_σ(A)
  double delta_hat = 0.0;    // Δ_{s,σ}(Ĥ) over A T_{s,σ}
  double bound = 0.0;        // Δ + δ_A + Δ δ_A
  bool holds = false;        // delta_h <= bound (up to 1e-12)
};

// Evaluates all three constants exactly (two-level pattern only). An
// identity A contributes δ_σ(A) = 0.
FactorizationReport check_factorization(const Dictionary& dict, const SparsityPattern& p, double guard = 1e8);

struct ExpectationReport {
  int trials = 0;
  double expected = 0.0;  // ‖w‖^2
  double mean = 0.0;      // sample mean of ‖A(w) γ‖^2
  double std_error = 0.0;
  bool within_band = false;  // |mean - expected| <= 4 SE
};

// Monte Carlo check of E‖A(w) γ‖^2 = ‖A(w)‖_F^2 = ‖w‖^2 with γ i.i.d. unit
// variance entries (Gaussian or Rademacher).
ExpectationReport check_expectation_identity(const HierSignal& w, UKind kind, int trials, std::uint64_t seed);

struct ToeplitzReport {
  double norm = 0.0;   // ‖A(v)‖_{2->2}, power iteration
  double bound = 0.0;  // 2 sqrt(s/mu) ‖v‖
  bool holds = false;
};

// Operator-norm bound for the matrix form of an (s, σ)-sparse difference v
// (A = identity).
ToeplitzReport check_toeplitz_bound(const HierSignal& v, int s);

}  // namespace hibd
