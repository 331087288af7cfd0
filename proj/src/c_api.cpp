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
#include "hibd/hibd.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "hibd/ensembles.hpp"
#include "hibd/error.hpp"
#include "hibd/hier.hpp"
#include "hibd/lifted.hpp"
#include "hibd/phase.hpp"
#include "hibd/random.hpp"
#include "hibd/ripcheck.hpp"
#include "hibd/solver.hpp"

struct hibd_dictionary {
  std::shared_ptr<const hibd::Dictionary> dict;
};

struct hibd_signal {
  hibd::HierSignal sig;
};

struct hibd_result {
  hibd::SolveResult res;
  hibd_signal estimate;
};

struct hibd_phase_table {
  hibd::PhaseTable table;
};

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

thread_local std::string g_last_error;

hibd_status fail(hibd_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

// Runs fn and maps any escaping exception onto a status code.
template <class Fn>
hibd_status guarded(Fn&& fn) {
  try {
    fn();
    return HIBD_OK;
  } catch (const hibd::InvalidArgument& e) {
    return fail(HIBD_ERR_INVALID_ARGUMENT, e.what());
  } catch (const hibd::ShapeError& e) {
    return fail(HIBD_ERR_SHAPE, e.what());
  } catch (const hibd::NumericError& e) {
    return fail(HIBD_ERR_NUMERIC, e.what());
  } catch (const hibd::GuardExceeded& e) {
    return fail(HIBD_ERR_GUARD, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HIBD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HIBD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HIBD_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) throw hibd::InvalidArgument(std::string(what) + " must not be NULL");
}

void need_len(size_t got, size_t want, const char* what) {
  if (got != want)
    throw hibd::ShapeError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                           std::to_string(want));
}

hibd::UKind to_u(hibd_u_kind k) {
  switch (k) {
    case HIBD_U_GAUSSIAN: return hibd::UKind::kGaussian;
    case HIBD_U_RADEMACHER: return hibd::UKind::kRademacher;
  }
  throw hibd::InvalidArgument("unknown u_kind");
}

hibd::AKind to_a(hibd_a_kind k) {
  switch (k) {
    case HIBD_A_IDENTITY: return hibd::AKind::kIdentity;
    case HIBD_A_GAUSSIAN: return hibd::AKind::kGaussian;
  }
  throw hibd::InvalidArgument("unknown a_kind");
}

hibd::Lifting to_lifting(hibd_lifting k) {
  switch (k) {
    case HIBD_LIFT_SHIFT_SUM: return hibd::Lifting::kShiftSum;
    case HIBD_LIFT_CONVOLUTION: return hibd::Lifting::kConvolution;
  }
  throw hibd::InvalidArgument("unknown lifting");
}

hibd::SolverConfig to_solver(const hibd_solver_config* c) {
  hibd::SolverConfig cfg;
  if (c) {
    cfg.max_outer_iters = c->max_outer_iters;
    cfg.outer_tol = c->outer_tol;
    cfg.cg_tol = c->cg_tol;
    cfg.cg_max_iters = c->cg_max_iters;
    cfg.final_ls_tol = c->final_ls_tol;
    cfg.final_ls_max_iters = c->final_ls_max_iters;
  }
  cfg.validate();
  return cfg;
}

MatrixXd mixing_matrix(const double* mixing, int rows, int cols) {
  need(mixing, "mixing");
  if (rows < 1 || cols < 1) throw hibd::InvalidArgument("mixing dimensions must be positive");
  return Eigen::Map<const MatrixXd>(mixing, rows, cols);
}

std::vector<int> to_vec(const int* p, size_t n, const char* what) {
  if (n > 0) need(p, what);
  return std::vector<int>(p, p + n);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hibd_result* make_result(hibd::SolveResult&& res) {
  auto* r = new hibd_result{std::move(res), {}};
  r->estimate.sig = r->res.estimate;
  return r;
}

}  // namespace

extern "C" {

const char* hibd_version(void) { return HIBD_VERSION_STRING; }

const char* hibd_last_error(void) { return g_last_error.c_str(); }

const char* hibd_status_name(hibd_status status) {
  switch (status) {
    case HIBD_OK: return "ok";
    case HIBD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HIBD_ERR_SHAPE: return "shape error";
    case HIBD_ERR_NUMERIC: return "numeric error";
    case HIBD_ERR_GUARD: return "guard exceeded";
    case HIBD_ERR_IO: return "i/o error";
    case HIBD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void hibd_string_free(char* s) { std::free(s); }

uint64_t hibd_derive_seed(uint64_t base, const uint64_t* keys, size_t count) {
  // Same chain as hibd::derive_seed, one key at a time.
  std::uint64_t h = hibd::mix64(base);
  for (size_t i = 0; i < count; ++i) h = hibd::mix64(h ^ (keys[i] + 0x9E3779B97F4A7C15ULL));
  return h;
}

uint64_t hibd_trial_seed(uint64_t base, int n, int mu, int s, int sigma, int t) {
  return hibd::trial_seed(base, n, mu, s, sigma, t);
}

hibd_status hibd_dictionary_generate(const hibd_ensemble_config* cfg, hibd_dictionary** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    hibd::EnsembleConfig ec;
    ec.mu = cfg->mu;
    ec.m = cfg->m;
    ec.n = cfg->n;
    ec.u_kind = to_u(cfg->u_kind);
    ec.a_kind = to_a(cfg->a_kind);
    ec.seed = cfg->seed;
    *out = new hibd_dictionary{std::make_shared<const hibd::Dictionary>(hibd::gen_dictionary(ec))};
  });
}

hibd_status hibd_dictionary_create(int mu, int m, int n, const double* u, const double* a, hibd_dictionary** out) {
  return guarded([&] {
    need(u, "u");
    need(out, "out");
    if (mu < 1 || m < 1 || n < 1) throw hibd::InvalidArgument("dictionary dimensions must be positive");
    MatrixXd um = Eigen::Map<const MatrixXd>(u, mu, m);
    if (a) {
      MatrixXd am = Eigen::Map<const MatrixXd>(a, m, n);
      *out = new hibd_dictionary{std::make_shared<const hibd::Dictionary>(std::move(um), std::move(am))};
    } else {
      if (m != n) throw hibd::InvalidArgument("identity A needs m == n");
      *out = new hibd_dictionary{std::make_shared<const hibd::Dictionary>(std::move(um))};
    }
  });
}

void hibd_dictionary_free(hibd_dictionary* d) { delete d; }

hibd_status hibd_dictionary_dims(const hibd_dictionary* d, int* mu, int* m, int* n) {
  return guarded([&] {
    need(d, "dictionary");
    if (mu) *mu = d->dict->mu();
    if (m) *m = d->dict->m();
    if (n) *n = d->dict->n();
  });
}

hibd_status hibd_dictionary_q(const hibd_dictionary* d, double* q, size_t len) {
  return guarded([&] {
    need(d, "dictionary");
    need(q, "q");
    const MatrixXd& qm = d->dict->q();
    need_len(len, static_cast<size_t>(qm.size()), "q");
    Eigen::Map<MatrixXd>(q, qm.rows(), qm.cols()) = qm;
  });
}

hibd_status hibd_signal_create(int users, int blocks, int block_len, const double* data, hibd_signal** out) {
  return guarded([&] {
    need(out, "out");
    const hibd::Shape shape{users, blocks, block_len};
    shape.validate();
    hibd::HierSignal sig(shape);
    if (data) sig.data() = Eigen::Map<const VectorXd>(data, static_cast<Eigen::Index>(shape.size()));
    *out = new hibd_signal{std::move(sig)};
  });
}

void hibd_signal_free(hibd_signal* s) { delete s; }

hibd_status hibd_signal_shape(const hibd_signal* s, int* users, int* blocks, int* block_len) {
  return guarded([&] {
    need(s, "signal");
    if (users) *users = s->sig.shape().users;
    if (blocks) *blocks = s->sig.shape().blocks;
    if (block_len) *block_len = s->sig.shape().block_len;
  });
}

hibd_status hibd_signal_data(const hibd_signal* s, const double** data, size_t* len) {
  return guarded([&] {
    need(s, "signal");
    need(data, "data");
    need(len, "len");
    *data = s->sig.data().data();
    *len = static_cast<size_t>(s->sig.data().size());
  });
}

hibd_status hibd_relative_error(const hibd_signal* estimate, const hibd_signal* truth, double* out) {
  return guarded([&] {
    need(estimate, "estimate");
    need(truth, "truth");
    need(out, "out");
    *out = hibd::relative_error(estimate->sig, truth->sig);
  });
}

hibd_status hibd_ground_truth(int mu, int n, int s, int sigma, uint64_t seed, hibd_signal** out) {
  return guarded([&] {
    need(out, "out");
    *out = new hibd_signal{hibd::gen_ground_truth(mu, n, s, sigma, seed).lifted};
  });
}

hibd_status hibd_demix_ground_truth(int users, int active, int mu, int n, int s, int sigma, uint64_t seed,
                                    hibd_signal** out, int* active_out) {
  return guarded([&] {
    need(out, "out");
    hibd::DemixGroundTruth gt = hibd::gen_demix_ground_truth(users, active, mu, n, s, sigma, seed);
    if (active_out) std::copy(gt.active_users.begin(), gt.active_users.end(), active_out);
    *out = new hibd_signal{std::move(gt.lifted)};
  });
}

hibd_status hibd_mixing_generate(int rows, int cols, uint64_t seed, double* out, size_t len) {
  return guarded([&] {
    need(out, "out");
    const MatrixXd d = hibd::gen_mixing(rows, cols, seed);
    need_len(len, static_cast<size_t>(d.size()), "mixing buffer");
    Eigen::Map<MatrixXd>(out, rows, cols) = d;
  });
}

hibd_status hibd_apply_lifted(const hibd_dictionary* d, hibd_lifting kind, const hibd_signal* w, double* y,
                              size_t y_len) {
  return guarded([&] {
    need(d, "dictionary");
    need(w, "signal");
    need(y, "y");
    const hibd::LiftedOperator op(d->dict, to_lifting(kind));
    const VectorXd out = op.apply(w->sig);
    need_len(y_len, static_cast<size_t>(out.size()), "y");
    Eigen::Map<VectorXd>(y, out.size()) = out;
  });
}

hibd_status hibd_apply_demix(const double* mixing, int rows, int cols, const hibd_dictionary* d, const hibd_signal* w,
                             double* y, size_t y_len) {
  return guarded([&] {
    need(d, "dictionary");
    need(w, "signal");
    need(y, "y");
    const hibd::DemixingOperator op(mixing_matrix(mixing, rows, cols), d->dict);
    const VectorXd out = op.apply(w->sig);
    need_len(y_len, static_cast<size_t>(out.size()), "y");
    Eigen::Map<VectorXd>(y, out.size()) = out;
  });
}

void hibd_solver_config_default(hibd_solver_config* cfg) {
  if (!cfg) return;
  const hibd::SolverConfig d;
  cfg->max_outer_iters = d.max_outer_iters;
  cfg->outer_tol = d.outer_tol;
  cfg->cg_tol = d.cg_tol;
  cfg->cg_max_iters = d.cg_max_iters;
  cfg->final_ls_tol = d.final_ls_tol;
  cfg->final_ls_max_iters = d.final_ls_max_iters;
}

hibd_status hibd_solve_deconvolution(const hibd_dictionary* d, hibd_lifting kind, const double* y, size_t y_len,
                                     int s, int sigma, const hibd_solver_config* cfg, hibd_result** out) {
  return guarded([&] {
    need(d, "dictionary");
    need(y, "y");
    need(out, "out");
    const hibd::LiftedOperator op(d->dict, to_lifting(kind));
    need_len(y_len, static_cast<size_t>(op.codomain_size()), "y");
    const VectorXd yv = Eigen::Map<const VectorXd>(y, op.codomain_size());
    *out = make_result(hibd::hihtp(op, yv, hibd::SparsityPattern{s, sigma, std::nullopt}, to_solver(cfg)));
  });
}

hibd_status hibd_solve_demixing(const double* mixing, int rows, int cols, const hibd_dictionary* d, const double* y,
                                size_t y_len, int users_active, int s, int sigma, const hibd_solver_config* cfg,
                                hibd_result** out) {
  return guarded([&] {
    need(d, "dictionary");
    need(y, "y");
    need(out, "out");
    const hibd::DemixingOperator op(mixing_matrix(mixing, rows, cols), d->dict);
    need_len(y_len, static_cast<size_t>(op.codomain_size()), "y");
    const VectorXd yv = Eigen::Map<const VectorXd>(y, op.codomain_size());
    *out = make_result(
        hibd::hihtp_three_level(op, yv, hibd::SparsityPattern{s, sigma, users_active}, to_solver(cfg)));
  });
}

void hibd_result_free(hibd_result* r) { delete r; }

hibd_status hibd_result_info(const hibd_result* r, hibd_solve_info* info) {
  return guarded([&] {
    need(r, "result");
    need(info, "info");
    info->outer_iters = r->res.outer_iters;
    info->converged = r->res.converged ? 1 : 0;
    info->final_rel_residual = r->res.final_ls.rel_residual;
    info->final_residual = r->res.residual_norms.empty() ? 0.0 : r->res.residual_norms.back();
    info->final_ls_iters = r->res.final_ls.iterations;
  });
}

hibd_status hibd_result_estimate(const hibd_result* r, const hibd_signal** estimate) {
  return guarded([&] {
    need(r, "result");
    need(estimate, "estimate");
    *estimate = &r->estimate;
  });
}

hibd_status hibd_result_support(const hibd_result* r, const size_t** flat, size_t* count) {
  return guarded([&] {
    need(r, "result");
    need(flat, "flat");
    need(count, "count");
    *flat = r->res.support.flat().data();
    *count = r->res.support.size();
  });
}

hibd_status hibd_run_trial(int n, int mu, int s, int sigma, uint64_t seed, hibd_u_kind u_kind,
                           const hibd_solver_config* cfg, int record_timing, hibd_trial_outcome* out) {
  return guarded([&] {
    need(out, "out");
    const hibd::TrialOutcome o = hibd::run_trial(n, mu, s, sigma, seed, to_u(u_kind), to_solver(cfg), record_timing != 0);
    out->success = o.success ? 1 : 0;
    out->numeric_failure = o.numeric_failure ? 1 : 0;
    out->outer_iters = o.outer_iters;
    out->rel_error = o.rel_error;
    out->ms = o.ms;
  });
}

hibd_status hibd_run_demix_trial(int users, int active, int rows, int mu, int n, int s, int sigma, uint64_t seed,
                                 hibd_u_kind u_kind, const hibd_solver_config* cfg, hibd_demix_outcome* out) {
  return guarded([&] {
    need(out, "out");
    const hibd::DemixTrialOutcome o =
        hibd::run_demix_trial(users, active, rows, mu, n, s, sigma, seed, to_u(u_kind), to_solver(cfg));
    out->success = o.success ? 1 : 0;
    out->numeric_failure = o.numeric_failure ? 1 : 0;
    out->outer_iters = o.outer_iters;
    out->rel_error = o.rel_error;
    out->worst_user_error = 0.0;
    for (double e : o.user_errors) out->worst_user_error = std::max(out->worst_user_error, e);
    if (o.numeric_failure) out->worst_user_error = o.rel_error;
  });
}

hibd_status hibd_phase_run(const hibd_phase_grid* grid, int threads, hibd_progress_fn progress, void* user,
                           hibd_phase_table** out) {
  return guarded([&] {
    need(grid, "grid");
    need(out, "out");
    hibd::ExperimentGrid g;
    g.n_values = to_vec(grid->n_values, grid->n_count, "n_values");
    g.sigma_values = to_vec(grid->sigma_values, grid->sigma_count, "sigma_values");
    g.s_values = to_vec(grid->s_values, grid->s_count, "s_values");
    g.mu_values = to_vec(grid->mu_values, grid->mu_count, "mu_values");
    g.trials_per_point = grid->trials_per_point;
    g.base_seed = grid->base_seed;
    g.u_kind = to_u(grid->u_kind);
    g.solver = to_solver(&grid->solver);
    g.record_timing = grid->record_timing != 0;
    hibd::ProgressFn fn;
    if (progress) fn = [progress, user](std::size_t done, std::size_t total) { progress(done, total, user); };
    *out = new hibd_phase_table{hibd::run_phase_diagram(g, threads, fn)};
  });
}

void hibd_phase_table_free(hibd_phase_table* t) { delete t; }

hibd_status hibd_phase_table_rows(const hibd_phase_table* t, size_t* count) {
  return guarded([&] {
    need(t, "table");
    need(count, "count");
    *count = t->table.rows.size();
  });
}

hibd_status hibd_phase_table_row(const hibd_phase_table* t, size_t i, hibd_phase_row* row) {
  return guarded([&] {
    need(t, "table");
    need(row, "row");
    if (i >= t->table.rows.size()) throw hibd::InvalidArgument("row index out of range");
    const hibd::PhasePoint& p = t->table.rows[i];
    *row = hibd_phase_row{p.n, p.mu, p.s, p.sigma, p.trials, p.successes,
                          p.success_prob, p.mean_outer_iters, p.mean_ms, p.numeric_failures};
  });
}

hibd_status hibd_phase_table_to_csv(const hibd_phase_table* t, const char* const* preamble, size_t count, char** out) {
  return guarded([&] {
    need(t, "table");
    need(out, "out");
    std::vector<std::string> lines;
    if (count > 0) need(preamble, "preamble");
    for (size_t i = 0; i < count; ++i) {
      need(preamble[i], "preamble entry");
      lines.emplace_back(preamble[i]);
    }
    *out = dup_string(hibd::to_csv(t->table, lines));
  });
}

hibd_status hibd_phase_table_from_csv(const char* text, hibd_phase_table** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new hibd_phase_table{hibd::parse_csv(text)};
  });
}

hibd_status hibd_lambda_outcomes_csv(const hibd_phase_table* t, double a, double c, char** out) {
  return guarded([&] {
    need(t, "table");
    need(out, "out");
    *out = dup_string(hibd::lambda_outcomes_csv(t->table, a, c));
  });
}

hibd_status hibd_lambda_value(double mu, double s, double sigma, double n, double a, double c, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = hibd::lambda_value(mu, s, sigma, n, a, c);
  });
}

hibd_status hibd_default_c_grid(double* out, size_t cap, size_t* count) {
  return guarded([&] {
    const std::vector<double> g = hibd::default_c_grid();
    if (count) *count = g.size();
    if (cap > 0) need(out, "out");
    for (size_t i = 0; i < std::min(cap, g.size()); ++i) out[i] = g[i];
  });
}

hibd_status hibd_fit_lambda_scaling(const hibd_phase_table* t, double a, const double* c_grid, size_t c_count,
                                    hibd_logistic_fit* out) {
  return guarded([&] {
    need(t, "table");
    need(out, "out");
    const std::vector<double> grid =
        (c_grid && c_count > 0) ? std::vector<double>(c_grid, c_grid + c_count) : hibd::default_c_grid();
    const hibd::LogisticFit f = hibd::fit_lambda_scaling(t->table, a, grid);
    *out = hibd_logistic_fit{f.a, f.c_a, f.intercept, f.slope, f.loss, f.separated ? 1 : 0,
                             f.se_intercept, f.se_slope, f.iterations};
  });
}

hibd_status hibd_ripcheck_lifted(const hibd_dictionary* d, hibd_lifting kind, int s, int sigma, int trials,
                                 uint64_t seed, int exact, double guard, hibd_rip_report* out) {
  return guarded([&] {
    need(d, "dictionary");
    need(out, "out");
    const hibd::LiftedOperator op(d->dict, to_lifting(kind));
    const hibd::SparsityPattern p{s, sigma, std::nullopt};
    hibd::RipEstimate est = hibd::estimate_hirip_mc(op, p, trials, seed);
    if (exact) est.exact = hibd::exact_hirip_small(op, p, guard > 0.0 ? guard : 1e8);
    out->s = s;
    out->sigma = sigma;
    out->trials = est.trials;
    out->seed = est.seed;
    out->delta_lower = est.delta_lower;
    out->has_exact = est.exact ? 1 : 0;
    out->exact = est.exact.value_or(0.0);
  });
}

hibd_status hibd_check_factorization(const hibd_dictionary* d, int s, int sigma, double guard,
                                     hibd_factorization_report* out) {
  return guarded([&] {
    need(d, "dictionary");
    need(out, "out");
    const hibd::FactorizationReport r =
        hibd::check_factorization(*d->dict, hibd::SparsityPattern{s, sigma, std::nullopt}, guard > 0.0 ? guard : 1e8);
    *out = hibd_factorization_report{r.delta_h, r.delta_a, r.delta_hat, r.bound, r.holds ? 1 : 0};
  });
}

}  // extern "C"
