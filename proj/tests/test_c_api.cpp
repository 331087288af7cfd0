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
// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "hibd/hibd.h"

namespace {

// Owns a C string returned by the library.
struct CString {
  char* p = nullptr;
  ~CString() { hibd_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::vector<double> q_of(const hibd_dictionary* d) {
  int mu = 0, m = 0, n = 0;
  EXPECT_EQ(hibd_dictionary_dims(d, &mu, &m, &n), HIBD_OK);
  std::vector<double> q(static_cast<std::size_t>(mu) * n);
  EXPECT_EQ(hibd_dictionary_q(d, q.data(), q.size()), HIBD_OK);
  return q;
}

// y_l = sum_k (Q w_k)_{l - k} for the convolution lifting, (Q w_k)_{l + k}
// for the shift-sum lifting.
std::vector<double> lifted_oracle(const std::vector<double>& q, int mu, int n, const double* w, bool convolution) {
  std::vector<double> y(mu, 0.0);
  for (int k = 0; k < mu; ++k)
    for (int i = 0; i < n; ++i) {
      const double wk = w[k * n + i];
      if (wk == 0.0) continue;
      for (int l = 0; l < mu; ++l) {
        const int r = ((convolution ? l - k : l + k) % mu + mu) % mu;
        y[l] += wk * q[static_cast<std::size_t>(i) * mu + r];
      }
    }
  return y;
}

hibd_dictionary* make_dictionary(int mu, int m, int n, hibd_a_kind a, uint64_t seed) {
  hibd_ensemble_config c{mu, m, n, HIBD_U_GAUSSIAN, a, seed};
  hibd_dictionary* d = nullptr;
  EXPECT_EQ(hibd_dictionary_generate(&c, &d), HIBD_OK) << hibd_last_error();
  return d;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(hibd_version(), HIBD_VERSION_STRING);
  EXPECT_STREQ(hibd_status_name(HIBD_OK), "ok");
  EXPECT_STRNE(hibd_status_name(HIBD_ERR_GUARD), hibd_status_name(HIBD_ERR_NUMERIC));
}

TEST(CApi, SeedsFollowSplitMix64) {
  EXPECT_EQ(hibd_derive_seed(0x9E3779B97F4A7C15ULL, nullptr, 0), 0xE220A8397B1DCDAFULL);
  const uint64_t keys[] = {50, 20, 2, 5, 7};
  EXPECT_EQ(hibd_trial_seed(1, 50, 20, 2, 5, 7), hibd_derive_seed(1, keys, 5));
}

TEST(CApi, ErrorsSetStatusAndMessage) {
  hibd_dictionary* d = nullptr;
  EXPECT_EQ(hibd_dictionary_generate(nullptr, &d), HIBD_ERR_INVALID_ARGUMENT);
  EXPECT_GT(std::strlen(hibd_last_error()), 0u);
  const double u[6] = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(hibd_dictionary_create(3, 2, 3, u, nullptr, &d), HIBD_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(d, nullptr);
  double lam = 0.0;
  EXPECT_EQ(hibd_lambda_value(-1, 1, 1, 2, 1, 1, &lam), HIBD_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(hibd_lambda_value(100, 2, 5, 50, 1, 0, &lam), HIBD_OK);
  EXPECT_NEAR(lam, 100.0 / (10.0 * std::log(50.0)), 1e-15);
  // Freeing null handles is a no-op.
  hibd_dictionary_free(nullptr);
  hibd_signal_free(nullptr);
  hibd_result_free(nullptr);
  hibd_phase_table_free(nullptr);
  hibd_string_free(nullptr);
}

TEST(CApi, CreatedDictionaryComputesProduct) {
  const double u[6] = {1, 0, 2, 0, 1, 3};  // 3 x 2, column-major
  const double a[4] = {1, 1, 0, 2};         // 2 x 2, column-major
  hibd_dictionary* d = nullptr;
  ASSERT_EQ(hibd_dictionary_create(3, 2, 2, u, a, &d), HIBD_OK);
  const std::vector<double> q = q_of(d);
  // Q = U A: column 0 = u0 + u1, column 1 = 2 u1.
  EXPECT_EQ(q, (std::vector<double>{1, 1, 5, 0, 2, 6}));
  std::vector<double> small(2);
  EXPECT_EQ(hibd_dictionary_q(d, small.data(), small.size()), HIBD_ERR_SHAPE);
  hibd_dictionary_free(d);
}

TEST(CApi, LiftedOperatorsMatchLoopOracle) {
  hibd_dictionary* d = make_dictionary(7, 3, 3, HIBD_A_IDENTITY, 4);
  const std::vector<double> q = q_of(d);
  std::vector<double> w(21);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 3.0 * i);
  hibd_signal* sig = nullptr;
  ASSERT_EQ(hibd_signal_create(1, 7, 3, w.data(), &sig), HIBD_OK);
  for (bool conv : {true, false}) {
    std::vector<double> y(7);
    ASSERT_EQ(hibd_apply_lifted(d, conv ? HIBD_LIFT_CONVOLUTION : HIBD_LIFT_SHIFT_SUM, sig, y.data(), y.size()),
              HIBD_OK);
    const auto want = lifted_oracle(q, 7, 3, w.data(), conv);
    for (int l = 0; l < 7; ++l) EXPECT_NEAR(y[l], want[l], 1e-12);
  }
  std::vector<double> y(6);
  EXPECT_EQ(hibd_apply_lifted(d, HIBD_LIFT_CONVOLUTION, sig, y.data(), y.size()), HIBD_ERR_SHAPE);
  hibd_signal_free(sig);
  hibd_dictionary_free(d);
}

TEST(CApi, SignalAccessors) {
  hibd_signal* s = nullptr;
  ASSERT_EQ(hibd_signal_create(2, 3, 4, nullptr, &s), HIBD_OK);
  int users = 0, blocks = 0, len = 0;
  ASSERT_EQ(hibd_signal_shape(s, &users, &blocks, &len), HIBD_OK);
  EXPECT_EQ(users, 2);
  EXPECT_EQ(blocks, 3);
  EXPECT_EQ(len, 4);
  const double* data = nullptr;
  std::size_t n = 0;
  ASSERT_EQ(hibd_signal_data(s, &data, &n), HIBD_OK);
  EXPECT_EQ(n, 24u);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(data[i], 0.0);
  hibd_signal_free(s);
  EXPECT_EQ(hibd_signal_create(0, 3, 4, nullptr, &s), HIBD_ERR_SHAPE);
}

TEST(CApi, DeconvolutionRoundTrip) {
  hibd_dictionary* d = make_dictionary(96, 8, 8, HIBD_A_IDENTITY, 11);
  hibd_signal* truth = nullptr;
  ASSERT_EQ(hibd_ground_truth(96, 8, 2, 2, 12, &truth), HIBD_OK);
  std::vector<double> y(96);
  ASSERT_EQ(hibd_apply_lifted(d, HIBD_LIFT_CONVOLUTION, truth, y.data(), y.size()), HIBD_OK);

  hibd_result* r = nullptr;
  ASSERT_EQ(hibd_solve_deconvolution(d, HIBD_LIFT_CONVOLUTION, y.data(), y.size(), 2, 2, nullptr, &r), HIBD_OK)
      << hibd_last_error();
  const hibd_signal* est = nullptr;
  ASSERT_EQ(hibd_result_estimate(r, &est), HIBD_OK);
  double err = 1.0;
  ASSERT_EQ(hibd_relative_error(est, truth, &err), HIBD_OK);
  EXPECT_LT(err, 1e-6);
  const std::size_t* flat = nullptr;
  std::size_t count = 0;
  ASSERT_EQ(hibd_result_support(r, &flat, &count), HIBD_OK);
  EXPECT_EQ(count, 4u);
  hibd_solve_info info{};
  ASSERT_EQ(hibd_result_info(r, &info), HIBD_OK);
  EXPECT_GE(info.outer_iters, 1);
  EXPECT_LT(info.final_rel_residual, 1e-6);

  y[5] = std::numeric_limits<double>::quiet_NaN();
  hibd_result* bad = nullptr;
  EXPECT_EQ(hibd_solve_deconvolution(d, HIBD_LIFT_CONVOLUTION, y.data(), y.size(), 2, 2, nullptr, &bad),
            HIBD_ERR_NUMERIC);
  EXPECT_EQ(bad, nullptr);

  hibd_solver_config cfg;
  hibd_solver_config_default(&cfg);
  EXPECT_EQ(cfg.max_outer_iters, 25);
  cfg.cg_tol = -1.0;
  y[5] = 0.0;
  EXPECT_EQ(hibd_solve_deconvolution(d, HIBD_LIFT_CONVOLUTION, y.data(), y.size(), 2, 2, &cfg, &bad),
            HIBD_ERR_INVALID_ARGUMENT);

  hibd_result_free(r);
  hibd_signal_free(truth);
  hibd_dictionary_free(d);
}

TEST(CApi, DemixingRoundTrip) {
  hibd_dictionary* d = make_dictionary(96, 8, 8, HIBD_A_IDENTITY, 21);
  hibd_signal* truth = nullptr;
  int active[1] = {-1};
  ASSERT_EQ(hibd_demix_ground_truth(4, 1, 96, 8, 1, 1, 22, &truth, active), HIBD_OK);
  EXPECT_GE(active[0], 0);
  EXPECT_LT(active[0], 4);
  std::vector<double> mixing(16);
  ASSERT_EQ(hibd_mixing_generate(4, 4, 23, mixing.data(), mixing.size()), HIBD_OK);
  std::vector<double> y(4 * 96);
  ASSERT_EQ(hibd_apply_demix(mixing.data(), 4, 4, d, truth, y.data(), y.size()), HIBD_OK);
  hibd_result* r = nullptr;
  ASSERT_EQ(hibd_solve_demixing(mixing.data(), 4, 4, d, y.data(), y.size(), 1, 1, 1, nullptr, &r), HIBD_OK)
      << hibd_last_error();
  const hibd_signal* est = nullptr;
  ASSERT_EQ(hibd_result_estimate(r, &est), HIBD_OK);
  double err = 1.0;
  ASSERT_EQ(hibd_relative_error(est, truth, &err), HIBD_OK);
  EXPECT_LT(err, 1e-6);
  hibd_result_free(r);
  hibd_signal_free(truth);
  hibd_dictionary_free(d);
}

TEST(CApi, TrialsAreReproducible) {
  hibd_trial_outcome a{}, b{};
  ASSERT_EQ(hibd_run_trial(8, 24, 1, 2, 99, HIBD_U_GAUSSIAN, nullptr, 0, &a), HIBD_OK);
  ASSERT_EQ(hibd_run_trial(8, 24, 1, 2, 99, HIBD_U_GAUSSIAN, nullptr, 0, &b), HIBD_OK);
  EXPECT_EQ(a.rel_error, b.rel_error);
  EXPECT_EQ(a.ms, 0.0);
  hibd_demix_outcome dm{};
  ASSERT_EQ(hibd_run_demix_trial(4, 1, 4, 96, 8, 1, 1, 5, HIBD_U_GAUSSIAN, nullptr, &dm), HIBD_OK);
  EXPECT_EQ(dm.success, 1);
  EXPECT_LT(dm.worst_user_error, 1e-6);
}

void count_progress(std::size_t, std::size_t, void* user) { ++*static_cast<int*>(user); }

TEST(CApi, PhaseTablePipeline) {
  const int n_values[] = {8};
  const int sigma_values[] = {2};
  const int s_values[] = {1, 2};
  const int mu_values[] = {12, 24};
  hibd_phase_grid g{};
  g.n_values = n_values;
  g.n_count = 1;
  g.sigma_values = sigma_values;
  g.sigma_count = 1;
  g.s_values = s_values;
  g.s_count = 2;
  g.mu_values = mu_values;
  g.mu_count = 2;
  g.trials_per_point = 5;
  g.base_seed = 7;
  g.u_kind = HIBD_U_GAUSSIAN;
  hibd_solver_config_default(&g.solver);
  g.record_timing = 0;

  int calls = 0;
  hibd_phase_table* t1 = nullptr;
  hibd_phase_table* t4 = nullptr;
  ASSERT_EQ(hibd_phase_run(&g, 1, count_progress, &calls, &t1), HIBD_OK) << hibd_last_error();
  ASSERT_EQ(hibd_phase_run(&g, 4, nullptr, nullptr, &t4), HIBD_OK);
  EXPECT_GT(calls, 0);

  std::size_t rows = 0;
  ASSERT_EQ(hibd_phase_table_rows(t1, &rows), HIBD_OK);
  ASSERT_EQ(rows, 4u);
  hibd_phase_row row{};
  ASSERT_EQ(hibd_phase_table_row(t1, 3, &row), HIBD_OK);
  EXPECT_EQ(row.s, 2);
  EXPECT_EQ(row.mu, 24);
  EXPECT_EQ(row.trials, 5);
  EXPECT_EQ(hibd_phase_table_row(t1, 4, &row), HIBD_ERR_INVALID_ARGUMENT);

  const char* pre[] = {"base_seed 7"};
  CString c1, c4;
  ASSERT_EQ(hibd_phase_table_to_csv(t1, pre, 1, &c1.p), HIBD_OK);
  ASSERT_EQ(hibd_phase_table_to_csv(t4, pre, 1, &c4.p), HIBD_OK);
  EXPECT_EQ(c1.str(), c4.str());
  EXPECT_EQ(c1.str().rfind("# base_seed 7\n", 0), 0u);

  hibd_phase_table* back = nullptr;
  ASSERT_EQ(hibd_phase_table_from_csv(c1.p, &back), HIBD_OK);
  CString c2;
  ASSERT_EQ(hibd_phase_table_to_csv(back, nullptr, 0, &c2.p), HIBD_OK);
  EXPECT_EQ(c1.str().substr(c1.str().find('\n') + 1), c2.str());

  hibd_logistic_fit f1{}, f2{};
  ASSERT_EQ(hibd_fit_lambda_scaling(back, 1, nullptr, 0, &f1), HIBD_OK);
  ASSERT_EQ(hibd_fit_lambda_scaling(back, 2, nullptr, 0, &f2), HIBD_OK);
  EXPECT_GE(f1.loss, 0.0);
  EXPECT_GE(f2.loss, 0.0);
  const double bad_grid[] = {0.0};
  EXPECT_EQ(hibd_fit_lambda_scaling(back, 1, bad_grid, 1, &f1), HIBD_ERR_INVALID_ARGUMENT);

  CString outcomes;
  ASSERT_EQ(hibd_lambda_outcomes_csv(back, 1, 1.0, &outcomes.p), HIBD_OK);
  EXPECT_EQ(outcomes.str().rfind("lambda,outcome\n", 0), 0u);

  hibd_phase_table* broken = nullptr;
  EXPECT_EQ(hibd_phase_table_from_csv("not,a,table\n", &broken), HIBD_ERR_INVALID_ARGUMENT);
  g.trials_per_point = 0;
  EXPECT_EQ(hibd_phase_run(&g, 1, nullptr, nullptr, &broken), HIBD_ERR_INVALID_ARGUMENT);

  hibd_phase_table_free(back);
  hibd_phase_table_free(t1);
  hibd_phase_table_free(t4);
}

TEST(CApi, DefaultGridReportsFullSize) {
  double buf[3];
  std::size_t count = 0;
  ASSERT_EQ(hibd_default_c_grid(buf, 3, &count), HIBD_OK);
  EXPECT_EQ(count, 40u);
  EXPECT_NEAR(buf[0], 0.1, 1e-15);
}

TEST(CApi, RipDiagnostics) {
  hibd_dictionary* d = make_dictionary(6, 3, 3, HIBD_A_IDENTITY, 31);
  hibd_rip_report rep{};
  ASSERT_EQ(hibd_ripcheck_lifted(d, HIBD_LIFT_CONVOLUTION, 2, 2, 200, 32, 1, 0, &rep), HIBD_OK);
  EXPECT_EQ(rep.has_exact, 1);
  EXPECT_LE(rep.delta_lower, rep.exact + 1e-12);
  EXPECT_EQ(hibd_ripcheck_lifted(d, HIBD_LIFT_CONVOLUTION, 2, 2, 10, 32, 1, 10.0, &rep), HIBD_ERR_GUARD);
  ASSERT_EQ(hibd_ripcheck_lifted(d, HIBD_LIFT_SHIFT_SUM, 1, 1, 10, 32, 0, 0, &rep), HIBD_OK);
  EXPECT_EQ(rep.has_exact, 0);
  hibd_dictionary_free(d);

  hibd_dictionary* g = make_dictionary(6, 3, 4, HIBD_A_GAUSSIAN, 33);
  hibd_factorization_report fr{};
  ASSERT_EQ(hibd_check_factorization(g, 1, 1, 0, &fr), HIBD_OK);
  EXPECT_EQ(fr.holds, 1);
  EXPECT_NEAR(fr.bound, fr.delta_hat + fr.delta_a + fr.delta_hat * fr.delta_a, 1e-15);
  hibd_dictionary_free(g);
}

}  // namespace
