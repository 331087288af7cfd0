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

// Recovery-probability experiments and the λ_a scaling fit.
//
// Every trial is keyed by (base_seed, n, mu, s, sigma, t):
//   trial_seed      = derive_seed(base_seed, {n, mu, s, sigma, t})
//   dictionary seed = derive_seed(trial_seed, {0})
//   truth seed      = derive_seed(trial_seed, {1})
// so a table does not depend on how trials are scheduled across threads.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hibd/ensembles.hpp"
#include "hibd/solver.hpp"

namespace hibd {

struct ExperimentGrid {
  std::vector<int> n_values;
  std::vector<int> sigma_values;
  std::vector<int> s_values;
  std::vector<int> mu_values;
  int trials_per_point = 100;
  std::uint64_t base_seed = 0;
  UKind u_kind = UKind::kGaussian;
  SolverConfig solver{};
  bool record_timing = true;  // mean_ms is written as 0 when off

  // Throws InvalidArgument on empty lists, trials < 1, or any grid point
  // with s > mu or sigma > n.
  void validate() const;
};

struct PhasePoint {
  int n = 0;
  int mu = 0;
  int s = 0;
  int sigma = 0;
  int trials = 0;
  int successes = 0;
  double success_prob = 0.0;
  double mean_outer_iters = 0.0;
  double mean_ms = 0.0;
  int numeric_failures = 0;  // counted as failures; not part of the CSV
};

struct PhaseTable {
  std::vector<PhasePoint> rows;
};

struct TrialOutcome {
  bool success = false;
  bool numeric_failure = false;
  int outer_iters = 0;
  double rel_error = 0.0;
  double ms = 0.0;
};

std::uint64_t trial_seed(std::uint64_t base, int n, int mu, int s, int sigma, int t);

// One blind-deconvolution trial: Q = U (A = identity), planted h (x) b,
// y = C(h (x) b), HiHTP, success iff the relative error is below 1e-6.
TrialOutcome run_trial(int n, int mu, int s, int sigma, std::uint64_t seed, UKind u_kind, const SolverConfig& cfg,
                       bool record_timing = true);

struct DemixTrialOutcome {
  bool success = false;  // every active user below the threshold
  bool numeric_failure = false;
  int outer_iters = 0;
  std::vector<int> active_users;
  std::vector<double> user_errors;  // relative error per active user
  double rel_error = 0.0;           // over the whole (N, mu, n) signal
};

// One demixing trial with N = users, S = active, M = rows and a dictionary
// shared by all users: mixing seed derive_seed(seed, {0}), dictionary seed
// derive_seed(seed, {1}), truth seed derive_seed(seed, {2}).
DemixTrialOutcome run_demix_trial(int users, int active, int rows, int mu, int n, int s, int sigma,
                                  std::uint64_t seed, UKind u_kind, const SolverConfig& cfg);

// Runs body(0..count-1) on `threads` workers (<= 0 means hardware
// concurrency). Each index runs exactly once; the call order is unspecified.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Rows are ordered n, sigma, s, mu (outermost to innermost), each list in the
// order given. `progress` is called after every finished trial, serialized
// across workers.
PhaseTable run_phase_diagram(const ExperimentGrid& grid, int threads = 0, const ProgressFn& progress = {});

// mu / (s^a sigma ln n + c s ln mu). Throws InvalidArgument on non-positive
// mu, s, sigma, n, a, on negative c, or a vanishing denominator.
double lambda_value(double mu, double s, double sigma, double n, double a, double c);

struct LogisticFit {
  double a = 0.0;
  double c_a = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  double loss = 0.0;  // mean negative log-likelihood per trial
  bool separated = false;
  double se_intercept = 0.0;
  double se_slope = 0.0;
  int iterations = 0;
};

// Maximum-likelihood fit of P(success | x) = 1 / (1 + exp(-(intercept +
// slope x))) to grouped Bernoulli outcomes (successes[j] of trials[j] at
// x[j]) by damped Newton, stopping when the gradient norm of the mean loss
// drops below 1e-10. Complete separation yields a capped fit with
// `separated` set.
LogisticFit fit_logistic(const std::vector<double>& x, const std::vector<double>& successes,
                         const std::vector<double>& trials);

// 40 points log-spaced over [0.1, 100].
std::vector<double> default_c_grid();

// Fits the logistic model against λ_a for every candidate C_a and keeps the
// one with the smallest loss (first on ties).
LogisticFit fit_lambda_scaling(const PhaseTable& table, double a, const std::vector<double>& c_grid);

// CSV with header n,mu,s,sigma,trials,successes,prob,mean_iters,mean_ms.
// Each entry of `preamble` becomes a leading "# ..." line.
std::string to_csv(const PhaseTable& table, const std::vector<std::string>& preamble = {});
// Skips "#" lines; throws InvalidArgument on a malformed table.
PhaseTable parse_csv(std::string_view text);

// Long-format "lambda,outcome" rows, one per trial, for external plotting.
std::string lambda_outcomes_csv(const PhaseTable& table, double a, double c);

// Weighted least-squares non-decreasing fit (pool adjacent violators).
std::vector<double> isotonic_increasing(const std::vector<double>& values, const std::vector<double>& weights);

}  // namespace hibd
