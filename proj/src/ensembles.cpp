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
#include "hibd/ensembles.hpp"

#include <cmath>

#include "hibd/error.hpp"

namespace hibd {

UKind parse_u_kind(std::string_view s) {
  if (s == "gaussian") return UKind::kGaussian;
  if (s == "rademacher") return UKind::kRademacher;
  throw InvalidArgument("unknown u_kind '" + std::string(s) + "' (expected gaussian|rademacher)");
}

AKind parse_a_kind(std::string_view s) {
  if (s == "identity") return AKind::kIdentity;
  if (s == "gaussian") return AKind::kGaussian;
  throw InvalidArgument("unknown a_kind '" + std::string(s) + "' (expected identity|gaussian)");
}

std::string to_string(UKind k) { return k == UKind::kGaussian ? "gaussian" : "rademacher"; }
std::string to_string(AKind k) { return k == AKind::kIdentity ? "identity" : "gaussian"; }

void EnsembleConfig::validate() const {
  if (mu < 1 || m < 1 || n < 1)
    throw InvalidArgument("ensemble dimensions must be positive (mu=" + std::to_string(mu) +
                          ", m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  if (a_kind == AKind::kIdentity && m != n)
    throw InvalidArgument("identity A requires m == n (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
}

Dictionary gen_dictionary(const EnsembleConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double u_scale = 1.0 / std::sqrt(static_cast<double>(cfg.mu));
  Eigen::MatrixXd u(cfg.mu, cfg.m);
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      u(r, c) = u_scale * (cfg.u_kind == UKind::kGaussian ? rng.normal() : rng.rademacher());
  if (cfg.a_kind == AKind::kIdentity) return Dictionary(std::move(u));

  const double a_scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
  Eigen::MatrixXd a(cfg.m, cfg.n);
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = a_scale * rng.normal();
  return Dictionary(std::move(u), std::move(a));
}

GroundTruth gen_ground_truth(int mu, int n, int s, int sigma, std::uint64_t seed) {
  if (mu < 1 || n < 1) throw InvalidArgument("ground truth dimensions must be positive");
  if (s < 1 || s > mu) throw InvalidArgument("filter sparsity s=" + std::to_string(s) + " exceeds mu=" + std::to_string(mu));
  if (sigma < 1 || sigma > n)
    throw InvalidArgument("message sparsity sigma=" + std::to_string(sigma) + " exceeds n=" + std::to_string(n));
  Rng rng(seed);
  GroundTruth gt;
  gt.h = Eigen::VectorXd::Zero(mu);
  gt.b = Eigen::VectorXd::Zero(n);
  gt.h_support = rng.sample_without_replacement(mu, s);
  gt.b_support = rng.sample_without_replacement(n, sigma);
  for (int k : gt.h_support) gt.h[k] = rng.normal();
  for (int i : gt.b_support) gt.b[i] = rng.normal();
  gt.lifted = HierSignal::outer(gt.h, gt.b);
  return gt;
}

Eigen::MatrixXd gen_mixing(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw InvalidArgument("mixing matrix dimensions must be positive");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  Eigen::MatrixXd d(rows, cols);
  for (Eigen::Index c = 0; c < d.cols(); ++c)
    for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, c) = scale * rng.normal();
  return d;
}

DemixGroundTruth gen_demix_ground_truth(int users, int active, int mu, int n, int s, int sigma,
                                        std::uint64_t seed) {
  if (users < 1 || active < 1 || active > users)
    throw InvalidArgument("active users S=" + std::to_string(active) + " must lie in [1, " + std::to_string(users) + "]");
  Rng rng(seed);
  DemixGroundTruth gt;
  gt.active_users = rng.sample_without_replacement(users, active);
  gt.lifted = HierSignal(Shape{users, mu, n});
  gt.users.resize(users);
  for (int p = 0; p < users; ++p) {
    gt.users[p].h = Eigen::VectorXd::Zero(mu);
    gt.users[p].b = Eigen::VectorXd::Zero(n);
    gt.users[p].lifted = HierSignal(mu, n);
  }
  for (int p : gt.active_users) {
    gt.users[p] = gen_ground_truth(mu, n, s, sigma, derive_seed(seed, {static_cast<std::uint64_t>(p)}));
    for (int k = 0; k < mu; ++k) gt.lifted.block(p, k) = gt.users[p].lifted.block(k);
  }
  return gt;
}

HierSignal random_sparse_signal(const Shape& shape, const SparsityPattern& p, Rng& rng) {
  p.validate(shape);
  HierSignal w(shape);
  const int active = p.users_active.value_or(shape.users);
  for (int u : rng.sample_without_replacement(shape.users, active))
    for (int k : rng.sample_without_replacement(shape.blocks, p.s))
      for (int i : rng.sample_without_replacement(shape.block_len, p.sigma)) w.data()[shape.index(u, k, i)] = rng.normal();
  const double norm = w.norm();
  if (norm > 0.0) w.data() /= norm;
  return w;
}

}  // namespace hibd
