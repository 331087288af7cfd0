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

// Circular convolution and the lifted measurement operators.
//
// Indices are residues modulo mu throughout:
//   [h * x]_l   = sum_k h_{l-k} x_k
//   [S_l x]_k   = x_{k+l}
//   [R x]_k     = x_{-k}
//   H(w)        = sum_k S_k Q w_k
//   C(w)        = H(R w),    so C(h (x) b) = h * (Q b)
//   M(X)_q      = sum_p D_{q,p} C(X_p)

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "hibd/hier.hpp"

namespace hibd {

// Factored dictionary Q = U A with U (mu x m) and A (m x n). An absent A is
// the identity (m == n) and Q is U itself.
class Dictionary {
 public:
  explicit Dictionary(Eigen::MatrixXd u);
  Dictionary(Eigen::MatrixXd u, Eigen::MatrixXd a);

  int mu() const { return static_cast<int>(u_.rows()); }
  int m() const { return static_cast<int>(u_.cols()); }
  int n() const { return static_cast<int>(q_.cols()); }
  bool identity_a() const { return !a_.has_value(); }

  const Eigen::MatrixXd& u() const { return u_; }
  // Throws InvalidArgument when A is the identity marker.
  const Eigen::MatrixXd& a() const;
  const Eigen::MatrixXd& q() const { return q_; }

  Eigen::VectorXd apply_q(const Eigen::VectorXd& b) const;

 private:
  Eigen::MatrixXd u_;
  std::optional<Eigen::MatrixXd> a_;
  Eigen::MatrixXd q_;
};

Eigen::VectorXd circ_conv(const Eigen::VectorXd& h, const Eigen::VectorXd& x);
Eigen::VectorXd shift(const Eigen::VectorXd& x, long long l);
Eigen::VectorXd reflect(const Eigen::VectorXd& x);
// Block-index reflection of a lifted tensor: block k of the result is block
// -k of w (per user in the three-level case).
HierSignal reflect_blocks(const HierSignal& w);

Eigen::VectorXd apply_H(const Dictionary& dict, const HierSignal& w);
HierSignal adjoint_H(const Dictionary& dict, const Eigen::VectorXd& y);
Eigen::VectorXd apply_C(const Dictionary& dict, const HierSignal& w);
HierSignal adjoint_C(const Dictionary& dict, const Eigen::VectorXd& y);
Eigen::VectorXd apply_M(const Eigen::MatrixXd& mixing, const Dictionary& dict, const HierSignal& x);
HierSignal adjoint_M(const Eigen::MatrixXd& mixing, const Dictionary& dict, const Eigen::VectorXd& y);

// Linear map from hierarchically shaped signals to flat measurement vectors.
// Implementations are immutable; every method is safe to call concurrently.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Shape domain() const = 0;
  virtual Eigen::Index codomain_size() const = 0;
  virtual Eigen::VectorXd apply(const HierSignal& w) const = 0;
  virtual HierSignal adjoint(const Eigen::VectorXd& y) const = 0;

  // op(embed(z, omega)) and restrict(op*(y), omega). The defaults go through
  // the full operator; lifted operators override them with O(|omega| mu)
  // kernels.
  virtual Eigen::VectorXd apply_restricted(const HierSupport& omega, const Eigen::VectorXd& z) const;
  virtual Eigen::VectorXd adjoint_restricted(const HierSupport& omega, const Eigen::VectorXd& y) const;

 protected:
  void check_domain(const Shape& s) const;
  void check_codomain(Eigen::Index len) const;
};

enum class Lifting {
  kShiftSum,     // H
  kConvolution,  // C = H o R
};

class LiftedOperator final : public LinearOperator {
 public:
  LiftedOperator(std::shared_ptr<const Dictionary> dict, Lifting kind);

  Shape domain() const override { return {1, dict_->mu(), dict_->n()}; }
  Eigen::Index codomain_size() const override { return dict_->mu(); }
  Eigen::VectorXd apply(const HierSignal& w) const override;
  HierSignal adjoint(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd apply_restricted(const HierSupport& omega, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd adjoint_restricted(const HierSupport& omega, const Eigen::VectorXd& y) const override;

  const Dictionary& dictionary() const { return *dict_; }
  Lifting kind() const { return kind_; }

 private:
  std::shared_ptr<const Dictionary> dict_;
  Lifting kind_;
};

// Three-level demixing operator built from one shared lifted convolution and
// an M x N mixing matrix. Output block q (length mu) sits at q*mu.
class DemixingOperator final : public LinearOperator {
 public:
  DemixingOperator(Eigen::MatrixXd mixing, std::shared_ptr<const Dictionary> dict);

  Shape domain() const override;
  Eigen::Index codomain_size() const override;
  Eigen::VectorXd apply(const HierSignal& x) const override;
  HierSignal adjoint(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd apply_restricted(const HierSupport& omega, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd adjoint_restricted(const HierSupport& omega, const Eigen::VectorXd& y) const override;

  const Eigen::MatrixXd& mixing() const { return mixing_; }
  const Dictionary& dictionary() const { return *dict_; }

 private:
  Eigen::MatrixXd mixing_;
  std::shared_ptr<const Dictionary> dict_;
};

// Explicit matrix acting on the flattened signal. Used for small reference
// operators (identity, scaled identity, plain Gaussian matrices).
class MatrixOperator final : public LinearOperator {
 public:
  MatrixOperator(Shape domain, Eigen::MatrixXd matrix);

  Shape domain() const override { return domain_; }
  Eigen::Index codomain_size() const override { return matrix_.rows(); }
  Eigen::VectorXd apply(const HierSignal& w) const override;
  HierSignal adjoint(const Eigen::VectorXd& y) const override;

  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Shape domain_;
  Eigen::MatrixXd matrix_;
};

// Dense matrix of `op`, assembled column by column from basis tensors.
Eigen::MatrixXd assemble_dense(const LinearOperator& op);

// The mu x (mu*n) matrix with entry mu^{-1/2} w_{j-k}(i) at row k, column
// i*mu + j: n Toeplitz blocks side by side. Its product with the column-major
// vectorisation of sqrt(mu) U reproduces apply_H with Q = U.
Eigen::MatrixXd build_matrix_Aw(const HierSignal& w, double guard = 1e7);

// Spectral norm by power iteration on M^T M: stops after `max_iters` or once
// the relative change of the estimate drops below `rel_tol`.
double operator_norm(const Eigen::MatrixXd& m, int max_iters = 200, double rel_tol = 1e-9);

}  // namespace hibd
