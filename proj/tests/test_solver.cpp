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

#include <cmath>
#include <limits>
#include <memory>

#include "hibd/ensembles.hpp"
#include "hibd/error.hpp"
#include "hibd/random.hpp"
#include "hibd/solver.hpp"

namespace hibd {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

MatrixXd columns(const MatrixXd& m, const HierSupport& omega) {
  MatrixXd out(m.rows(), static_cast<Eigen::Index>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(omega.flat()[i]);
  return out;
}

TEST(Cg, OrthonormalColumnsConvergeInOneStep) {
  const Shape shape{1, 4, 5};
  const MatrixXd q = gaussian(30, 20, 1).householderQr().householderQ() * MatrixXd::Identity(30, 20);
  const MatrixOperator op(shape, q);
  const HierSupport omega(shape, {0, 3, 7, 12, 19});
  const VectorXd y = gaussian(30, 1, 2).col(0);
  const CgResult r = cg_restricted(op, y, omega, 1e-12, 50);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.stationary || r.converged);
  EXPECT_LT((r.z - columns(q, omega).transpose() * y).norm(), 1e-12);
}

TEST(Cg, SingleCoordinateClosedForm) {
  const Shape shape{1, 3, 3};
  const MatrixXd a = gaussian(8, 9, 3);
  const MatrixOperator op(shape, a);
  const VectorXd y = gaussian(8, 1, 4).col(0);
  const HierSupport omega(shape, {4});
  const CgResult r = cg_restricted(op, y, omega, 1e-12, 10);
  ASSERT_EQ(r.z.size(), 1);
  EXPECT_NEAR(r.z[0], a.col(4).dot(y) / a.col(4).squaredNorm(), 1e-12);
}

TEST(Cg, MatchesDenseLeastSquares) {
  const Shape shape{1, 6, 5};
  const MatrixXd a = gaussian(40, 30, 5);
  const MatrixOperator op(shape, a);
  const VectorXd y = gaussian(40, 1, 6).col(0);
  const HierSupport omega(shape, {1, 2, 8, 9, 15, 22, 23, 29});
  const CgResult r = cg_restricted(op, y, omega, 1e-14, 200);
  const VectorXd oracle = columns(a, omega).colPivHouseholderQr().solve(y);
  EXPECT_LT((r.z - oracle).norm(), 1e-9 * oracle.norm());
}

TEST(Cg, ExactWarmStartNeedsNoIterations) {
  const Shape shape{1, 4, 4};
  const MatrixXd a = gaussian(20, 16, 7);
  const MatrixOperator op(shape, a);
  const HierSupport omega(shape, {0, 5, 10});
  const VectorXd z(VectorXd::LinSpaced(3, 1.0, 3.0));
  const VectorXd y = columns(a, omega) * z;
  const CgResult r = cg_restricted(op, y, omega, 1e-8, 10, z);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.z, z);
}

TEST(Cg, RejectsBadInputs) {
  const Shape shape{1, 2, 2};
  const MatrixOperator op(shape, MatrixXd::Identity(4, 4));
  EXPECT_THROW(cg_restricted(op, VectorXd::Ones(4), HierSupport(shape), 1e-6, 10), InvalidArgument);
  EXPECT_THROW(cg_restricted(op, VectorXd::Ones(3), HierSupport(shape, {1}), 1e-6, 10), ShapeError);
  EXPECT_THROW(cg_restricted(op, VectorXd::Ones(4), HierSupport(shape, {1}), 1e-6, 10, VectorXd::Ones(2)),
               ShapeError);
}

TEST(Hihtp, IdentityOperatorRecoversInOneStep) {
  const Shape shape{1, 6, 5};
  const MatrixOperator op(shape, MatrixXd::Identity(30, 30));
  Rng rng(8);
  const SparsityPattern p{2, 2, std::nullopt};
  for (int rep = 0; rep < 20; ++rep) {
    const HierSignal truth = random_sparse_signal(shape, p, rng);
    const SolveResult r = hihtp(op, truth.data(), p);
    EXPECT_LT(relative_error(r.estimate, truth), 1e-14);
    EXPECT_TRUE(r.support.satisfies(p));
    EXPECT_LE(r.outer_iters, 2);
    EXPECT_EQ(r.residual_norms.size(), static_cast<std::size_t>(r.outer_iters));
  }
}

TEST(Hihtp, RecoversDeconvolutionWithManyMeasurements) {
  int successes = 0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    EnsembleConfig c;
    c.mu = 128;
    c.m = 16;
    c.n = 16;
    c.seed = derive_seed(100, {t, 0});
    auto dict = std::make_shared<const Dictionary>(gen_dictionary(c));
    const GroundTruth gt = gen_ground_truth(128, 16, 2, 2, derive_seed(100, {t, 1}));
    const LiftedOperator op(dict, Lifting::kConvolution);
    const SolveResult r = hihtp(op, op.apply(gt.lifted), {2, 2, std::nullopt});
    if (relative_error(r.estimate, gt.lifted) < kRecoveryThreshold) ++successes;
  }
  EXPECT_EQ(successes, 10);
}

TEST(Hihtp, ThreeLevelNeedsUserSparsity) {
  EnsembleConfig c;
  c.mu = 8;
  c.m = 4;
  c.n = 4;
  auto dict = std::make_shared<const Dictionary>(gen_dictionary(c));
  const DemixingOperator op(gen_mixing(3, 4, 1), dict);
  EXPECT_THROW(hihtp_three_level(op, VectorXd::Zero(op.codomain_size()), {1, 1, std::nullopt}), InvalidArgument);
}

TEST(Hihtp, ThreeLevelRecoversGenerousDemixing) {
  const DemixGroundTruth gt = gen_demix_ground_truth(4, 1, 96, 8, 1, 1, 5);
  EnsembleConfig c;
  c.mu = 96;
  c.m = 8;
  c.n = 8;
  c.seed = 6;
  auto dict = std::make_shared<const Dictionary>(gen_dictionary(c));
  const DemixingOperator op(gen_mixing(4, 4, 7), dict);
  const SolveResult r = hihtp_three_level(op, op.apply(gt.lifted), {1, 1, 1});
  EXPECT_LT(relative_error(r.estimate, gt.lifted), kRecoveryThreshold);
  EXPECT_EQ(r.support.active_users(), 1);
}

TEST(Hihtp, NonFiniteMeasurementsAreNumericErrors) {
  const Shape shape{1, 2, 2};
  const MatrixOperator op(shape, MatrixXd::Identity(4, 4));
  VectorXd y = VectorXd::Ones(4);
  y[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(hihtp(op, y, {1, 1, std::nullopt}), NumericError);
  y[2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(hihtp(op, y, {1, 1, std::nullopt}), NumericError);
  EXPECT_THROW(hihtp(op, VectorXd::Ones(5), {1, 1, std::nullopt}), ShapeError);
  EXPECT_THROW(hihtp(op, VectorXd::Ones(4), {3, 1, std::nullopt}), ShapeError);
}

TEST(Hihtp, ZeroMeasurementGivesZeroEstimate) {
  const Shape shape{1, 3, 3};
  const MatrixOperator op(shape, gaussian(6, 9, 9));
  const SolveResult r = hihtp(op, VectorXd::Zero(6), {1, 2, std::nullopt});
  EXPECT_EQ(r.estimate.norm(), 0.0);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_outer_iters = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.cg_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.final_ls_tol = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_DOUBLE_EQ(SolverConfig{}.final_ls_tol, std::pow(10.0, -6.5));
}

TEST(RelativeError, Definition) {
  HierSignal a(2, 2), b(2, 2);
  a.data() << 1, 0, 0, 0;
  b.data() << 0, 0, 3, 4;
  EXPECT_DOUBLE_EQ(relative_error(a, b), std::sqrt(26.0) / 5.0);
  EXPECT_DOUBLE_EQ(relative_error(a, HierSignal(2, 2)), 1.0);
  EXPECT_THROW(relative_error(a, HierSignal(1, 4)), ShapeError);
}

}  // namespace
}  // namespace hibd
