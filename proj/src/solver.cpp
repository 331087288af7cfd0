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
#include "hibd/solver.hpp"

#include <cmath>
#include <string>

#include "hibd/error.hpp"

namespace hibd {

namespace {

using Eigen::VectorXd;

void require_finite(const VectorXd& v, const char* where) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite values in ") + where);
}

}  // namespace

void SolverConfig::validate() const {
  if (max_outer_iters < 1 || cg_max_iters < 1 || final_ls_max_iters < 1)
    throw InvalidArgument("solver iteration caps must be >= 1");
  if (!(outer_tol > 0.0) || !(cg_tol > 0.0) || !(final_ls_tol > 0.0))
    throw InvalidArgument("solver tolerances must be > 0");
}

CgResult cg_restricted(const LinearOperator& op, const VectorXd& y, const HierSupport& omega, double tol,
                       int max_iters, const std::optional<VectorXd>& warm) {
  if (omega.empty()) throw InvalidArgument("cg_restricted needs a non-empty support");
  if (y.size() != op.codomain_size()) throw ShapeError("measurement length does not match operator");

  const auto dim = static_cast<Eigen::Index>(omega.size());
  CgResult res;
  res.z = warm ? *warm : VectorXd::Zero(dim);
  if (res.z.size() != dim) throw ShapeError("warm start length does not match support");

  const double ynorm = y.norm();
  const double scale = ynorm > 0.0 ? ynorm : 1.0;
  const double target = tol * scale;

  VectorXd r = y - op.apply_restricted(omega, res.z);
  double rnorm = r.norm();
  res.rel_residual = rnorm / scale;
  if (rnorm <= target) {
    res.converged = true;
    return res;
  }

  // The normal-equation residual A^T r cannot drop much below rounding noise
  // relative to A^T y; treat that floor as "least squares solved".
  const double floor = 1e-12 * op.adjoint_restricted(omega, y).norm();
  VectorXd s = op.adjoint_restricted(omega, r);
  VectorXd p = s;
  double gamma = s.squaredNorm();
  if (std::sqrt(gamma) <= floor) {
    res.stationary = true;
    return res;
  }

  for (int it = 1; it <= max_iters; ++it) {
    const VectorXd q = op.apply_restricted(omega, p);
    const double qq = q.squaredNorm();
    if (!(qq > 0.0) || !std::isfinite(qq)) {
      res.breakdown = true;
      break;
    }
    const double alpha = gamma / qq;
    res.z += alpha * p;
    r -= alpha * q;
    res.iterations = it;
    rnorm = r.norm();
    res.rel_residual = rnorm / scale;
    if (rnorm <= target) {
      res.converged = true;
      break;
    }
    s = op.adjoint_restricted(omega, r);
    const double gamma_next = s.squaredNorm();
    if (std::sqrt(gamma_next) <= floor) {
      res.stationary = true;
      break;
    }
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  return res;
}

SolveResult hihtp(const LinearOperator& op, const VectorXd& y, const SparsityPattern& p, const SolverConfig& cfg) {
  cfg.validate();
  const Shape shape = op.domain();
  p.validate(shape);
  if (y.size() != op.codomain_size())
    throw ShapeError("measurement has length " + std::to_string(y.size()) + ", operator expects " +
                     std::to_string(op.codomain_size()));
  require_finite(y, "measurements");

  SolveResult out;
  out.estimate = HierSignal(shape);
  out.support = HierSupport(shape);

  for (int k = 0; k < cfg.max_outer_iters; ++k) {
    HierSignal g = op.adjoint(y - op.apply(out.estimate));
    g.data() += out.estimate.data();
    require_finite(g.data(), "gradient step");

    HierSupport omega = project_hier(g, p).support;
    const CgResult ls = cg_restricted(op, y, omega, cfg.cg_tol, cfg.cg_max_iters, restrict(out.estimate, omega));
    require_finite(ls.z, "restricted least squares");

    HierSignal next = embed(ls.z, omega);
    const double step = (next.data() - out.estimate.data()).norm();
    out.estimate = std::move(next);
    out.support = std::move(omega);
    out.outer_iters = k + 1;
    out.residual_norms.push_back((y - op.apply_restricted(out.support, ls.z)).norm());
    if (step < cfg.outer_tol) {
      out.converged = true;
      break;
    }
  }

  out.final_ls = cg_restricted(op, y, out.support, cfg.final_ls_tol, cfg.final_ls_max_iters,
                               restrict(out.estimate, out.support));
  require_finite(out.final_ls.z, "final least squares");
  out.estimate = embed(out.final_ls.z, out.support);
  return out;
}

SolveResult hihtp_three_level(const DemixingOperator& op, const VectorXd& y, const SparsityPattern& p,
                              const SolverConfig& cfg) {
  if (!p.users_active) throw InvalidArgument("three-level recovery needs a user sparsity S");
  return hihtp(op, y, p, cfg);
}

double relative_error(const HierSignal& estimate, const HierSignal& truth) {
  if (!(estimate.shape() == truth.shape())) throw ShapeError("relative_error: shape mismatch");
  const double tn = truth.norm();
  const double diff = (estimate.data() - truth.data()).norm();
  return tn > 0.0 ? diff / tn : diff;
}

}  // namespace hibd
