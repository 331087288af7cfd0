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
#include "hibd/lifted.hpp"

#include <cmath>
#include <string>

#include "hibd/error.hpp"

namespace hibd {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index wrap(long long i, Index mu) {
  const long long r = i % static_cast<long long>(mu);
  return static_cast<Index>(r < 0 ? r + mu : r);
}

// The two lifted operators differ only in the sign with which the block
// index enters the shift: H puts Q w_k at S_k, C puts it at S_{-k}.
int block_sign(Lifting kind) { return kind == Lifting::kShiftSum ? +1 : -1; }

// y_j += z * Q((j + off) mod mu, i)
void scatter_column(const MatrixXd& q, Index i, Index off, double z, Eigen::Ref<VectorXd> y) {
  const Index mu = q.rows();
  const double* col = q.col(i).data();
  const Index head = mu - off;
  for (Index j = 0; j < head; ++j) y[j] += z * col[j + off];
  for (Index j = head; j < mu; ++j) y[j] += z * col[j + off - mu];
}

// sum_j Q(j, i) * y((j - off) mod mu)
double gather_column(const MatrixXd& q, Index i, Index off, const double* y) {
  const Index mu = q.rows();
  const double* col = q.col(i).data();
  double acc = 0.0;
  for (Index j = 0; j < off; ++j) acc += col[j] * y[j - off + mu];
  for (Index j = off; j < mu; ++j) acc += col[j] * y[j - off];
  return acc;
}

// Full lifted apply through one GEMM: P = Q W, then y_j = sum_k P(j + sign k, k).
VectorXd lifted_apply(const Dictionary& dict, const double* data, int sign) {
  const Index mu = dict.mu();
  const Index n = dict.n();
  Eigen::Map<const MatrixXd> w(data, n, mu);
  const MatrixXd p = dict.q() * w;
  VectorXd y = VectorXd::Zero(mu);
  for (Index k = 0; k < mu; ++k) {
    const Index off = wrap(sign * static_cast<long long>(k), mu);
    for (Index j = 0; j < mu; ++j) y[j] += p(wrap(j + off, mu), k);
  }
  return y;
}

// Block k = Q^T S_{-sign k} y, i.e. Q^T applied to the k-th column of the
// circulant Y(j, k) = y_{j - sign k}.
void lifted_adjoint(const Dictionary& dict, const VectorXd& y, int sign, double* out) {
  const Index mu = dict.mu();
  const Index n = dict.n();
  MatrixXd circ(mu, mu);
  for (Index k = 0; k < mu; ++k) {
    const Index off = wrap(sign * static_cast<long long>(k), mu);
    for (Index j = 0; j < mu; ++j) circ(j, k) = y[wrap(j - off, mu)];
  }
  Eigen::Map<MatrixXd> blocks(out, n, mu);
  blocks.noalias() = dict.q().transpose() * circ;
}

void check_length(Index got, Index want, const char* what) {
  if (got != want)
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                     std::to_string(got));
}

void check_two_level(const Dictionary& dict, const HierSignal& w) {
  const Shape want{1, dict.mu(), dict.n()};
  if (!(w.shape() == want))
    throw ShapeError("lifted signal must have shape (" + std::to_string(dict.mu()) + ", " +
                     std::to_string(dict.n()) + ")");
}

}  // namespace

Dictionary::Dictionary(MatrixXd u) : u_(std::move(u)) {
  if (u_.rows() < 1 || u_.cols() < 1) throw ShapeError("dictionary U must be non-empty");
  q_ = u_;
}

Dictionary::Dictionary(MatrixXd u, MatrixXd a) : u_(std::move(u)), a_(std::move(a)) {
  if (u_.rows() < 1 || u_.cols() < 1 || a_->cols() < 1) throw ShapeError("dictionary factors must be non-empty");
  if (u_.cols() != a_->rows())
    throw ShapeError("dictionary factors do not chain: U is " + std::to_string(u_.rows()) + "x" +
                     std::to_string(u_.cols()) + ", A is " + std::to_string(a_->rows()) + "x" +
                     std::to_string(a_->cols()));
  q_ = u_ * *a_;
}

const MatrixXd& Dictionary::a() const {
  if (!a_) throw InvalidArgument("dictionary uses the identity for A");
  return *a_;
}

VectorXd Dictionary::apply_q(const VectorXd& b) const {
  check_length(b.size(), n(), "apply_q");
  return q_ * b;
}

VectorXd circ_conv(const VectorXd& h, const VectorXd& x) {
  check_length(x.size(), h.size(), "circ_conv");
  const Index mu = h.size();
  VectorXd out = VectorXd::Zero(mu);
  for (Index l = 0; l < mu; ++l)
    for (Index k = 0; k < mu; ++k) out[l] += h[wrap(l - k, mu)] * x[k];
  return out;
}

VectorXd shift(const VectorXd& x, long long l) {
  const Index mu = x.size();
  VectorXd out(mu);
  for (Index k = 0; k < mu; ++k) out[k] = x[wrap(k + l, mu)];
  return out;
}

VectorXd reflect(const VectorXd& x) {
  const Index mu = x.size();
  VectorXd out(mu);
  for (Index k = 0; k < mu; ++k) out[k] = x[wrap(-k, mu)];
  return out;
}

HierSignal reflect_blocks(const HierSignal& w) {
  const Shape& s = w.shape();
  HierSignal out(s);
  for (int p = 0; p < s.users; ++p)
    for (int k = 0; k < s.blocks; ++k) out.block(p, k) = w.block(p, static_cast<int>(wrap(-k, s.blocks)));
  return out;
}

VectorXd apply_H(const Dictionary& dict, const HierSignal& w) {
  check_two_level(dict, w);
  return lifted_apply(dict, w.data().data(), +1);
}

HierSignal adjoint_H(const Dictionary& dict, const VectorXd& y) {
  check_length(y.size(), dict.mu(), "adjoint_H");
  HierSignal out(dict.mu(), dict.n());
  lifted_adjoint(dict, y, +1, out.data().data());
  return out;
}

VectorXd apply_C(const Dictionary& dict, const HierSignal& w) {
  check_two_level(dict, w);
  return lifted_apply(dict, w.data().data(), -1);
}

HierSignal adjoint_C(const Dictionary& dict, const VectorXd& y) {
  check_length(y.size(), dict.mu(), "adjoint_C");
  HierSignal out(dict.mu(), dict.n());
  lifted_adjoint(dict, y, -1, out.data().data());
  return out;
}

VectorXd apply_M(const MatrixXd& mixing, const Dictionary& dict, const HierSignal& x) {
  return DemixingOperator(mixing, std::make_shared<const Dictionary>(dict)).apply(x);
}

HierSignal adjoint_M(const MatrixXd& mixing, const Dictionary& dict, const VectorXd& y) {
  return DemixingOperator(mixing, std::make_shared<const Dictionary>(dict)).adjoint(y);
}

// ---------------------------------------------------------------------------

void LinearOperator::check_domain(const Shape& s) const {
  if (!(s == domain())) {
    const Shape d = domain();
    throw ShapeError("operator domain is (" + std::to_string(d.users) + ", " + std::to_string(d.blocks) +
                     ", " + std::to_string(d.block_len) + "), signal is (" + std::to_string(s.users) +
                     ", " + std::to_string(s.blocks) + ", " + std::to_string(s.block_len) + ")");
  }
}

void LinearOperator::check_codomain(Index len) const { check_length(len, codomain_size(), "measurement"); }

VectorXd LinearOperator::apply_restricted(const HierSupport& omega, const VectorXd& z) const {
  return apply(embed(z, omega));
}

VectorXd LinearOperator::adjoint_restricted(const HierSupport& omega, const VectorXd& y) const {
  return restrict(adjoint(y), omega);
}

LiftedOperator::LiftedOperator(std::shared_ptr<const Dictionary> dict, Lifting kind)
    : dict_(std::move(dict)), kind_(kind) {
  if (!dict_) throw InvalidArgument("lifted operator needs a dictionary");
}

VectorXd LiftedOperator::apply(const HierSignal& w) const {
  check_domain(w.shape());
  return lifted_apply(*dict_, w.data().data(), block_sign(kind_));
}

HierSignal LiftedOperator::adjoint(const VectorXd& y) const {
  check_codomain(y.size());
  HierSignal out(domain());
  lifted_adjoint(*dict_, y, block_sign(kind_), out.data().data());
  return out;
}

VectorXd LiftedOperator::apply_restricted(const HierSupport& omega, const VectorXd& z) const {
  check_domain(omega.shape());
  check_length(z.size(), static_cast<Index>(omega.size()), "restricted coefficients");
  const Index mu = dict_->mu();
  const int sign = block_sign(kind_);
  VectorXd y = VectorXd::Zero(mu);
  for (std::size_t t = 0; t < omega.size(); ++t) {
    const SupportEntry e = omega.entry(t);
    scatter_column(dict_->q(), e.index, wrap(sign * static_cast<long long>(e.block), mu), z[static_cast<Index>(t)], y);
  }
  return y;
}

VectorXd LiftedOperator::adjoint_restricted(const HierSupport& omega, const VectorXd& y) const {
  check_domain(omega.shape());
  check_codomain(y.size());
  const Index mu = dict_->mu();
  const int sign = block_sign(kind_);
  VectorXd out(static_cast<Index>(omega.size()));
  for (std::size_t t = 0; t < omega.size(); ++t) {
    const SupportEntry e = omega.entry(t);
    out[static_cast<Index>(t)] =
        gather_column(dict_->q(), e.index, wrap(sign * static_cast<long long>(e.block), mu), y.data());
  }
  return out;
}

DemixingOperator::DemixingOperator(MatrixXd mixing, std::shared_ptr<const Dictionary> dict)
    : mixing_(std::move(mixing)), dict_(std::move(dict)) {
  if (!dict_) throw InvalidArgument("demixing operator needs a dictionary");
  if (mixing_.rows() < 1 || mixing_.cols() < 1) throw ShapeError("mixing matrix must be non-empty");
}

Shape DemixingOperator::domain() const {
  return {static_cast<int>(mixing_.cols()), dict_->mu(), dict_->n()};
}

Index DemixingOperator::codomain_size() const { return mixing_.rows() * dict_->mu(); }

VectorXd DemixingOperator::apply(const HierSignal& x) const {
  check_domain(x.shape());
  const Index mu = dict_->mu();
  const Index users = mixing_.cols();
  MatrixXd conv = MatrixXd::Zero(mu, users);
  const std::size_t per_user = static_cast<std::size_t>(mu) * dict_->n();
  for (Index p = 0; p < users; ++p) {
    const double* data = x.data().data() + p * per_user;
    if (Eigen::Map<const VectorXd>(data, static_cast<Index>(per_user)).isZero(0.0)) continue;
    conv.col(p) = lifted_apply(*dict_, data, -1);
  }
  MatrixXd out = conv * mixing_.transpose();
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

HierSignal DemixingOperator::adjoint(const VectorXd& y) const {
  check_codomain(y.size());
  const Index mu = dict_->mu();
  Eigen::Map<const MatrixXd> ymat(y.data(), mu, mixing_.rows());
  const MatrixXd z = ymat * mixing_;
  HierSignal out(domain());
  const std::size_t per_user = static_cast<std::size_t>(mu) * dict_->n();
  for (Index p = 0; p < mixing_.cols(); ++p)
    lifted_adjoint(*dict_, z.col(p), -1, out.data().data() + p * per_user);
  return out;
}

VectorXd DemixingOperator::apply_restricted(const HierSupport& omega, const VectorXd& z) const {
  check_domain(omega.shape());
  check_length(z.size(), static_cast<Index>(omega.size()), "restricted coefficients");
  const Index mu = dict_->mu();
  MatrixXd conv = MatrixXd::Zero(mu, mixing_.cols());
  for (std::size_t t = 0; t < omega.size(); ++t) {
    const SupportEntry e = omega.entry(t);
    scatter_column(dict_->q(), e.index, wrap(-static_cast<long long>(e.block), mu), z[static_cast<Index>(t)],
                   conv.col(e.user));
  }
  MatrixXd out = conv * mixing_.transpose();
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

VectorXd DemixingOperator::adjoint_restricted(const HierSupport& omega, const VectorXd& y) const {
  check_domain(omega.shape());
  check_codomain(y.size());
  const Index mu = dict_->mu();
  Eigen::Map<const MatrixXd> ymat(y.data(), mu, mixing_.rows());
  const MatrixXd zmat = ymat * mixing_;
  VectorXd out(static_cast<Index>(omega.size()));
  for (std::size_t t = 0; t < omega.size(); ++t) {
    const SupportEntry e = omega.entry(t);
    out[static_cast<Index>(t)] = gather_column(dict_->q(), e.index, wrap(-static_cast<long long>(e.block), mu),
                                               zmat.col(e.user).data());
  }
  return out;
}

MatrixOperator::MatrixOperator(Shape domain, MatrixXd matrix) : domain_(domain), matrix_(std::move(matrix)) {
  domain_.validate();
  if (static_cast<std::size_t>(matrix_.cols()) != domain_.size())
    throw ShapeError("matrix has " + std::to_string(matrix_.cols()) + " columns, domain needs " +
                     std::to_string(domain_.size()));
}

VectorXd MatrixOperator::apply(const HierSignal& w) const {
  check_domain(w.shape());
  return matrix_ * w.data();
}

HierSignal MatrixOperator::adjoint(const VectorXd& y) const {
  check_codomain(y.size());
  return HierSignal(domain_, matrix_.transpose() * y);
}

// ---------------------------------------------------------------------------

MatrixXd assemble_dense(const LinearOperator& op) {
  const Shape d = op.domain();
  MatrixXd out(op.codomain_size(), static_cast<Index>(d.size()));
  HierSignal e(d);
  for (Index c = 0; c < out.cols(); ++c) {
    e.data()[c] = 1.0;
    out.col(c) = op.apply(e);
    e.data()[c] = 0.0;
  }
  return out;
}

MatrixXd build_matrix_Aw(const HierSignal& w, double guard) {
  const Shape& s = w.shape();
  if (s.users != 1) throw ShapeError("build_matrix_Aw expects a two-level signal");
  const Index mu = s.blocks;
  const Index n = s.block_len;
  const double entries = static_cast<double>(mu) * static_cast<double>(mu) * static_cast<double>(n);
  if (entries > guard)
    throw GuardExceeded("dense lifted matrix would hold " + std::to_string(entries) + " entries (guard " +
                        std::to_string(guard) + ")");
  const double scale = 1.0 / std::sqrt(static_cast<double>(mu));
  MatrixXd out(mu, mu * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < mu; ++j)
      for (Index k = 0; k < mu; ++k)
        out(k, i * mu + j) = scale * w.block(static_cast<int>(wrap(j - k, mu)))[i];
  return out;
}

double operator_norm(const MatrixXd& m, int max_iters, double rel_tol) {
  if (m.size() == 0) return 0.0;
  VectorXd v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    VectorXd next = m.transpose() * (m * v);
    const double est = next.norm();
    if (est == 0.0) return 0.0;
    v = next / est;
    const bool settled = it > 0 && std::abs(est - lambda) <= rel_tol * est;
    lambda = est;
    if (settled) break;
  }
  return std::sqrt(lambda);
}

}  // namespace hibd
