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
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "hibd/error.hpp"
#include "hibd/hier.hpp"
#include "hibd/random.hpp"

namespace hibd {
namespace {

HierSignal from_blocks(const std::vector<std::vector<double>>& blocks) {
  HierSignal w(static_cast<int>(blocks.size()), static_cast<int>(blocks[0].size()));
  for (std::size_t k = 0; k < blocks.size(); ++k)
    for (std::size_t i = 0; i < blocks[k].size(); ++i) w.block(static_cast<int>(k))[static_cast<Eigen::Index>(i)] = blocks[k][i];
  return w;
}

// Best captured energy over every coordinate subset that respects the
// pattern, by scanning all 2^(users*mu*n) masks.
double mask_oracle(const HierSignal& w, const SparsityPattern& p) {
  const Shape sh = w.shape();
  const std::size_t dim = sh.size();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << dim); ++mask) {
    std::set<int> users;
    std::vector<std::set<int>> blocks(sh.users);
    std::vector<int> per_block(static_cast<std::size_t>(sh.users) * sh.blocks, 0);
    double e = 0.0;
    for (std::size_t f = 0; f < dim; ++f) {
      if (!(mask >> f & 1u)) continue;
      const int user = static_cast<int>(f / (static_cast<std::size_t>(sh.blocks) * sh.block_len));
      const int block = static_cast<int>(f / sh.block_len % sh.blocks);
      users.insert(user);
      blocks[user].insert(block);
      ++per_block[static_cast<std::size_t>(user) * sh.blocks + block];
      e += w.data()[static_cast<Eigen::Index>(f)] * w.data()[static_cast<Eigen::Index>(f)];
    }
    if (static_cast<int>(users.size()) > p.users_active.value_or(1)) continue;
    bool ok = true;
    for (const auto& b : blocks) ok = ok && static_cast<int>(b.size()) <= p.s;
    for (int c : per_block) ok = ok && c <= p.sigma;
    if (ok) best = std::max(best, e);
  }
  return best;
}

HierSignal random_signal(const Shape& sh, Rng& rng, bool integer_valued) {
  HierSignal w(sh);
  for (Eigen::Index i = 0; i < w.data().size(); ++i)
    w.data()[i] = integer_valued ? static_cast<double>(rng.below(5)) - 2.0 : rng.normal();
  return w;
}

TEST(HierSignal, OuterProductBlocks) {
  Eigen::VectorXd h(3), b(2);
  h << 1.0, 0.0, -2.0;
  b << 3.0, 4.0;
  const HierSignal w = HierSignal::outer(h, b);
  EXPECT_EQ(w.shape().blocks, 3);
  EXPECT_EQ(w.shape().block_len, 2);
  EXPECT_DOUBLE_EQ(w.block(0)[1], 4.0);
  EXPECT_DOUBLE_EQ(w.block(1).norm(), 0.0);
  EXPECT_DOUBLE_EQ(w.block(2)[0], -6.0);
}

TEST(HierSignal, RejectsBadShape) {
  EXPECT_THROW(HierSignal(0, 3), ShapeError);
  EXPECT_THROW(HierSignal(Shape{1, 2, 2}, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST(SparsityPattern, Validation) {
  const Shape sh{1, 3, 3};
  EXPECT_NO_THROW((SparsityPattern{3, 3, std::nullopt}.validate(sh)));
  EXPECT_THROW((SparsityPattern{4, 1, std::nullopt}.validate(sh)), ShapeError);
  EXPECT_THROW((SparsityPattern{1, 4, std::nullopt}.validate(sh)), ShapeError);
  EXPECT_THROW((SparsityPattern{0, 1, std::nullopt}.validate(sh)), ShapeError);
  EXPECT_THROW((SparsityPattern{1, 1, 3}.validate(Shape{2, 3, 3})), ShapeError);
}

TEST(HierSupport, RejectsDuplicatesAndRange) {
  const Shape sh{1, 2, 2};
  EXPECT_THROW(HierSupport(sh, {1, 1}), ShapeError);
  EXPECT_THROW(HierSupport(sh, {4}), ShapeError);
  const HierSupport s(sh, {3, 0});
  EXPECT_EQ(s.flat(), (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(s.entry(1), (SupportEntry{0, 1, 1}));
}

TEST(ProjectHier, PicksLargestSingleEntry) {
  const HierSignal w = from_blocks({{3, 0, 0}, {0, 0, 4}, {1, 1, 0}});
  const Projection pr = project_hier(w, {1, 1, std::nullopt});
  ASSERT_EQ(pr.support.size(), 1u);
  EXPECT_EQ(pr.support.entry(0), (SupportEntry{0, 1, 2}));
  EXPECT_DOUBLE_EQ(pr.signal.block(1)[2], 4.0);
  EXPECT_DOUBLE_EQ(pr.signal.norm(), 4.0);
  EXPECT_DOUBLE_EQ(captured_energy(w, pr.support), mask_oracle(w, {1, 1, std::nullopt}));
}

TEST(ProjectHier, IdentityOnSparseInput) {
  const HierSignal w = from_blocks({{0, 2, 0}, {0, 0, 0}, {1, 0, 0}});
  const Projection pr = project_hier(w, {2, 1, std::nullopt});
  EXPECT_EQ(pr.signal.data(), w.data());
  EXPECT_TRUE(pr.support.satisfies({2, 1, std::nullopt}));
}

TEST(ProjectHier, FullPatternIsIdentity) {
  Rng rng(11);
  const HierSignal w = random_signal({1, 4, 3}, rng, false);
  const Projection pr = project_hier(w, {4, 3, std::nullopt});
  EXPECT_EQ(pr.signal.data(), w.data());
  EXPECT_EQ(pr.support.size(), 12u);
}

TEST(ProjectHier, PadsSupportToFullSize) {
  const HierSignal w(3, 4);
  const Projection pr = project_hier(w, {2, 3, std::nullopt});
  EXPECT_EQ(pr.support.size(), 6u);
  EXPECT_EQ(pr.support.entry(0), (SupportEntry{0, 0, 0}));
  EXPECT_TRUE(pr.support.satisfies({2, 3, std::nullopt}));
}

TEST(ProjectHier, TiesPreferLowestIndex) {
  const HierSignal w = from_blocks({{1, 1}, {1, 1}});
  const Projection pr = project_hier(w, {1, 1, std::nullopt});
  EXPECT_EQ(pr.support.entry(0), (SupportEntry{0, 0, 0}));
}

TEST(ProjectHier, ExhaustiveSmallInstancesMatchMaskOracle) {
  Rng rng(2024);
  int cases = 0;
  for (int mu = 1; mu <= 4; ++mu)
    for (int n = 1; n <= 4; ++n)
      for (int s = 1; s <= std::min(2, mu); ++s)
        for (int sigma = 1; sigma <= std::min(2, n); ++sigma)
          for (int rep = 0; rep < 6; ++rep) {
            const SparsityPattern p{s, sigma, std::nullopt};
            const HierSignal w = random_signal({1, mu, n}, rng, rep % 2 == 0);
            const Projection pr = project_hier(w, p);
            ASSERT_TRUE(pr.support.satisfies(p));
            ASSERT_NEAR(pr.signal.data().squaredNorm(), mask_oracle(w, p), 1e-12)
                << "mu=" << mu << " n=" << n << " s=" << s << " sigma=" << sigma;
            ++cases;
          }
  EXPECT_EQ(cases, 294);  // 49 shape/pattern combinations, 6 signals each
}

TEST(ProjectHier, ThreeLevelMatchesMaskOracle) {
  Rng rng(7);
  for (int rep = 0; rep < 40; ++rep) {
    const SparsityPattern p{1 + rep % 2, 1 + (rep / 2) % 2, 1 + (rep / 4) % 2};
    const HierSignal w = random_signal({3, 2, 2}, rng, rep % 3 == 0);
    const Projection pr = project_hier(w, p);
    ASSERT_TRUE(pr.support.satisfies(p));
    ASSERT_EQ(pr.support.size(), static_cast<std::size_t>(*p.users_active * p.s * p.sigma));
    ASSERT_NEAR(pr.signal.data().squaredNorm(), mask_oracle(w, p), 1e-12);
  }
}

TEST(ProjectHier, Idempotent) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const SparsityPattern p{2, 2, std::nullopt};
    const HierSignal w = random_signal({1, 6, 5}, rng, false);
    const Projection once = project_hier(w, p);
    const Projection twice = project_hier(once.signal, p);
    EXPECT_EQ(twice.signal.data(), once.signal.data());
    EXPECT_DOUBLE_EQ(captured_energy(once.signal, twice.support), once.signal.data().squaredNorm());
  }
}

TEST(ProjectHier, BlockPermutationEquivariance) {
  Rng rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const HierSignal w = random_signal({1, 5, 4}, rng, false);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 4; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    HierSignal pw(5, 4);
    for (int k = 0; k < 5; ++k) pw.block(perm[k]) = w.block(k);
    const SparsityPattern p{2, 2, std::nullopt};
    const Projection a = project_hier(w, p);
    const Projection b = project_hier(pw, p);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(b.signal.block(perm[k]), a.signal.block(k));
  }
}

TEST(ProjectHier, ShapeMismatchThrows) {
  EXPECT_THROW(project_hier(HierSignal(2, 2), {3, 1, std::nullopt}), ShapeError);
}

TEST(BruteForce, MatchesProjectionExample) {
  const HierSignal w = from_blocks({{3, 0, 0}, {0, 0, 4}, {1, 1, 0}});
  const SparsityPattern p{1, 1, std::nullopt};
  EXPECT_DOUBLE_EQ(captured_energy(w, brute_force_project(w, p).support), 16.0);
}

TEST(BruteForce, PicksHeavierBlock) {
  const HierSignal w = from_blocks({{1, 1}, {0, 2}});
  const Projection pr = brute_force_project(w, {1, 2, std::nullopt});
  EXPECT_EQ(pr.support.entry(0).block, 1);
  EXPECT_DOUBLE_EQ(pr.signal.norm(), 2.0);
}

TEST(BruteForce, ZeroSignal) {
  const Projection pr = brute_force_project(HierSignal(3, 2), {2, 1, std::nullopt});
  EXPECT_TRUE(pr.support.satisfies({2, 1, std::nullopt}));
  EXPECT_EQ(pr.signal.norm(), 0.0);
}

TEST(BruteForce, GuardRefusesLargeEnumerations) {
  EXPECT_THROW(brute_force_project(HierSignal(40, 40), {10, 10, std::nullopt}), GuardExceeded);
}

TEST(Supports, CountMatchesEnumeration) {
  const Shape sh{2, 4, 3};
  const SparsityPattern p{2, 2, 1};
  std::size_t visited = 0;
  for_each_support(sh, p, [&](std::span<const std::size_t> flat) {
    EXPECT_EQ(flat.size(), 4u);
    EXPECT_TRUE(std::is_sorted(flat.begin(), flat.end()));
    ++visited;
  });
  // 2 users * C(4,2) block pairs * C(3,2)^2 entry choices
  EXPECT_EQ(visited, 2u * 6u * 9u);
  EXPECT_DOUBLE_EQ(count_supports(sh, p), 108.0);
}

TEST(RestrictEmbed, RoundTrips) {
  Rng rng(3);
  const HierSignal w = random_signal({1, 3, 3}, rng, false);
  const HierSupport omega(w.shape(), {0, 4, 8});
  const Eigen::VectorXd v = restrict(w, omega);
  ASSERT_EQ(v.size(), 3);
  const HierSignal back = embed(v, omega);
  for (std::size_t f = 0; f < 9; ++f) {
    const double expect = (f % 4 == 0) ? w.data()[static_cast<Eigen::Index>(f)] : 0.0;
    EXPECT_EQ(back.data()[static_cast<Eigen::Index>(f)], expect);
  }
  EXPECT_EQ(restrict(back, omega), v);
}

TEST(RestrictEmbed, EmptyAndFullSupport) {
  Rng rng(4);
  const HierSignal w = random_signal({1, 2, 3}, rng, false);
  const HierSupport none(w.shape());
  EXPECT_EQ(restrict(w, none).size(), 0);
  EXPECT_EQ(embed(Eigen::VectorXd(0), none).norm(), 0.0);
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), 0);
  const HierSupport full(w.shape(), all);
  EXPECT_EQ(restrict(w, full), w.data());
  EXPECT_EQ(embed(w.data(), full).data(), w.data());
}

TEST(RestrictEmbed, LengthMismatchThrows) {
  const HierSupport omega(Shape{1, 2, 2}, {0, 1});
  EXPECT_THROW(embed(Eigen::VectorXd::Zero(3), omega), ShapeError);
}

}  // namespace
}  // namespace hibd
