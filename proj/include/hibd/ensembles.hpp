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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hibd/hier.hpp"
#include "hibd/lifted.hpp"
#include "hibd/random.hpp"

namespace hibd {

enum class UKind { kGaussian, kRademacher };
enum class AKind { kIdentity, kGaussian };

UKind parse_u_kind(std::string_view s);
AKind parse_a_kind(std::string_view s);
std::string to_string(UKind k);
std::string to_string(AKind k);

struct EnsembleConfig {
  int mu = 0;
  int m = 0;
  int n = 0;
  UKind u_kind = UKind::kGaussian;
  AKind a_kind = AKind::kIdentity;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on non-positive dims or an identity A with m != n.
  void validate() const;
};

// U is filled column by column from one stream seeded with cfg.seed, then A
// (if Gaussian) column by column from the same stream.
//   U: N(0, 1/mu) or +-mu^{-1/2};  A: N(0, 1/m).
Dictionary gen_dictionary(const EnsembleConfig& cfg);

struct GroundTruth {
  Eigen::VectorXd h;
  Eigen::VectorXd b;
  std::vector<int> h_support;
  std::vector<int> b_support;
  HierSignal lifted;
};

// Supports uniform without replacement (h first, then b), nonzeros N(0,1)
// drawn in support order.
GroundTruth gen_ground_truth(int mu, int n, int s, int sigma, std::uint64_t seed);

// M x N, entries N(0, 1/M), column-major fill.
Eigen::MatrixXd gen_mixing(int rows, int cols, std::uint64_t seed);

struct DemixGroundTruth {
  std::vector<int> active_users;
  // One entry per user; inactive users hold zero vectors.
  std::vector<GroundTruth> users;
  HierSignal lifted;  // shape (N, mu, n)
};

// S active users uniform without replacement; user p's (h, b) comes from
// gen_ground_truth with seed derive_seed(seed, {p}).
DemixGroundTruth gen_demix_ground_truth(int users, int active, int mu, int n, int s, int sigma,
                                        std::uint64_t seed);

// Unit-norm pattern-sparse signal: uniform maximal support, Gaussian fill,
// normalised.
HierSignal random_sparse_signal(const Shape& shape, const SparsityPattern& p, Rng& rng);

}  // namespace hibd
