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
#include "hibd/ripcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hibd/error.hpp"
#include "hibd/random.hpp"

namespace hibd {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Columns of the operator, computed on first use.
class ColumnCache {
 public:
  explicit ColumnCache(const LinearOperator& op) : op_(op), basis_(op.domain()), cols_(op.domain().size()) {}

  const VectorXd& column(std::size_t f) {
    auto& c = cols_[f];
    if (!c) {
      basis_.data()[static_cast<Eigen::Index>(f)] = 1.0;
      c = op_.apply(basis_);
      basis_.data()[static_cast<Eigen::Index>(f)] = 0.0;
    }
    return *c;
  }

 private:
  const LinearOperator& op_;
  HierSignal basis_;
  std::vector<std::optional<VectorXd>> cols_;
};

void guard_enumeration(const Shape& shape, const SparsityPattern& p, double guard) {
  const double per = static_cast<double>(p.users_active.value_or(shape.users)) * p.s * p.sigma;
  const double cost = count_supports(shape, p) * per * per * per;
  if (cost > guard)
    throw GuardExceeded("exact RIP enumeration would cost ~" + std::to_string(cost) + " flops (guard " +
                        std::to_string(guard) + ")");
}

double max_abs_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

}  // namespace

RipEstimate estimate_hirip_mc(const LinearOperator& op, const SparsityPattern& p, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("estimate_hirip_mc needs trials >= 1");
  const Shape shape = op.domain();
  p.validate(shape);
  RipEstimate est;
  est.pattern = p;
  est.trials = trials;
  est.seed = seed;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const HierSignal w = random_sparse_signal(shape, p, rng);
    est.delta_lower = std::max(est.delta_lower, std::abs(op.apply(w).squaredNorm() - w.data().squaredNorm()));
  }
  return est;
}

double gram_deviation(const MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(ev[ev.size() - 1] - 1.0, 1.0 - ev[0]);
}

double exact_hirip_small(const LinearOperator& op, const SparsityPattern& p, double guard) {
  const Shape shape = op.domain();
  p.validate(shape);
  guard_enumeration(shape, p, guard);
  ColumnCache cache(op);
  double worst = 0.0;
  MatrixXd restricted;
  for_each_support(shape, p, [&](std::span<const std::size_t> flat) {
    restricted.resize(op.codomain_size(), static_cast<Eigen::Index>(flat.size()));
    for (std::size_t c = 0; c < flat.size(); ++c) restricted.col(static_cast<Eigen::Index>(c)) = cache.column(flat[c]);
    worst = std::max(worst, gram_deviation(restricted.transpose() * restricted));
  });
  return worst;
}

FactorizationReport check_factorization(const Dictionary& dict, const SparsityPattern& p, double guard) {
  if (p.users_active && *p.users_active != 1) throw InvalidArgument("check_factorization takes a two-level pattern");
  const int mu = dict.mu();
  const int n = dict.n();
  const MatrixXd a = dict.identity_a() ? MatrixXd::Identity(n, n) : dict.a();
  const SparsityPattern two{p.s, p.sigma, std::nullopt};

  FactorizationReport rep;
  rep.delta_h = exact_hirip_small(LiftedOperator(std::make_shared<const Dictionary>(dict), Lifting::kShiftSum), two, guard);
  if (!dict.identity_a())
    rep.delta_a = exact_hirip_small(MatrixOperator(Shape{1, 1, n}, a), SparsityPattern{1, p.sigma, std::nullopt}, guard);

  // Δ = sup over unit w in T_{s,σ} of |‖Ĥ(A w)‖^2 - ‖A w‖^2|, Ĥ the shift-sum
  // operator built on U alone (domain R^mu (x) R^m).
  const Shape shape{1, mu, n};
  two.validate(shape);
  guard_enumeration(shape, two, guard);
  const LiftedOperator h_hat(std::make_shared<const Dictionary>(dict.u()), Lifting::kShiftSum);
  const Shape hat_shape = h_hat.domain();
  MatrixXd lifted_a;  // columns e_k (x) A e_i in R^mu (x) R^m
  MatrixXd image;     // Ĥ applied to those columns
  for_each_support(shape, two, [&](std::span<const std::size_t> flat) {
    const auto cols = static_cast<Eigen::Index>(flat.size());
    lifted_a.setZero(static_cast<Eigen::Index>(hat_shape.size()), cols);
    image.resize(mu, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::size_t f = flat[static_cast<std::size_t>(c)];
      const int k = static_cast<int>(f / n);
      const int i = static_cast<int>(f % n);
      HierSignal col(hat_shape);
      col.block(k) = a.col(i);
      lifted_a.col(c) = col.data();
      image.col(c) = h_hat.apply(col);
    }
    const MatrixXd diff = image.transpose() * image - lifted_a.transpose() * lifted_a;
    rep.delta_hat = std::max(rep.delta_hat, max_abs_eigenvalue(diff));
  });

  rep.bound = rep.delta_hat + rep.delta_a + rep.delta_hat * rep.delta_a;
  rep.holds = rep.delta_h <= rep.bound + 1e-12;
  return rep;
}

ExpectationReport check_expectation_identity(const HierSignal& w, UKind kind, int trials, std::uint64_t seed) {
  if (trials < 2) throw InvalidArgument("check_expectation_identity needs trials >= 2");
  const MatrixXd t = build_matrix_Aw(w);
  Rng rng(seed);
  VectorXd gamma(t.cols());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int r = 0; r < trials; ++r) {
    for (Eigen::Index j = 0; j < gamma.size(); ++j) gamma[j] = kind == UKind::kGaussian ? rng.normal() : rng.rademacher();
    const double v = (t * gamma).squaredNorm();
    sum += v;
    sum_sq += v * v;
  }
  ExpectationReport rep;
  rep.trials = trials;
  rep.expected = w.data().squaredNorm();
  rep.mean = sum / trials;
  const double var = std::max(0.0, (sum_sq - trials * rep.mean * rep.mean) / (trials - 1));
  rep.std_error = std::sqrt(var / trials);
  const double gap = std::abs(rep.mean - rep.expected);
  rep.within_band = rep.std_error > 0.0 ? gap <= 4.0 * rep.std_error : gap <= 1e-12 * std::max(1.0, rep.expected);
  return rep;
}

ToeplitzReport check_toeplitz_bound(const HierSignal& v, int s) {
  const int mu = v.shape().blocks;
  if (s < 1 || s > mu) throw InvalidArgument("toeplitz bound needs 1 <= s <= mu");
  ToeplitzReport rep;
  rep.norm = operator_norm(build_matrix_Aw(v));
  rep.bound = 2.0 * std::sqrt(static_cast<double>(s) / mu) * v.norm();
  rep.holds = rep.norm <= rep.bound;
  return rep;
}

}  // namespace hibd
