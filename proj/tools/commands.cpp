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
#include "commands.hpp"

#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hibd/hibd.h"

namespace hibd_cli {

namespace {

// Success threshold on the relative Frobenius error.
constexpr double kRecoveryThreshold = 1e-6;

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DictPtr = std::unique_ptr<hibd_dictionary, Deleter<hibd_dictionary, hibd_dictionary_free>>;
using SignalPtr = std::unique_ptr<hibd_signal, Deleter<hibd_signal, hibd_signal_free>>;
using ResultPtr = std::unique_ptr<hibd_result, Deleter<hibd_result, hibd_result_free>>;
using TablePtr = std::unique_ptr<hibd_phase_table, Deleter<hibd_phase_table, hibd_phase_table_free>>;
using StringPtr = std::unique_ptr<char, Deleter<char, hibd_string_free>>;

void check(hibd_status st) {
  if (st != HIBD_OK) throw ApiError(st, hibd_last_error());
}

std::uint64_t derive(std::uint64_t base, std::uint64_t key) { return hibd_derive_seed(base, &key, 1); }

hibd_u_kind u_kind(const json& cfg) {
  const std::string v = cfg.at("u_kind").get<std::string>();
  if (v == "gaussian") return HIBD_U_GAUSSIAN;
  if (v == "rademacher") return HIBD_U_RADEMACHER;
  throw ConfigError("u_kind must be 'gaussian' or 'rademacher', got '" + v + "'");
}

hibd_a_kind a_kind(const json& cfg) {
  const std::string v = cfg.at("a_kind").get<std::string>();
  if (v == "identity") return HIBD_A_IDENTITY;
  if (v == "gaussian") return HIBD_A_GAUSSIAN;
  throw ConfigError("a_kind must be 'identity' or 'gaussian', got '" + v + "'");
}

hibd_lifting lifting(const json& cfg) {
  const std::string v = cfg.at("lifting").get<std::string>();
  if (v == "convolution") return HIBD_LIFT_CONVOLUTION;
  if (v == "shift_sum") return HIBD_LIFT_SHIFT_SUM;
  throw ConfigError("lifting must be 'convolution' or 'shift_sum', got '" + v + "'");
}

hibd_solver_config solver(const json& cfg) {
  const json& s = cfg.at("solver");
  hibd_solver_config c;
  c.max_outer_iters = s.at("max_outer_iters").get<int>();
  c.outer_tol = s.at("outer_tol").get<double>();
  c.cg_tol = s.at("cg_tol").get<double>();
  c.cg_max_iters = s.at("cg_max_iters").get<int>();
  c.final_ls_tol = s.at("final_ls_tol").get<double>();
  c.final_ls_max_iters = s.at("final_ls_max_iters").get<int>();
  return c;
}

json meta(const json& cfg, std::uint64_t base_seed) {
  return json{{"tool", "hibd"},
              {"version", hibd_version()},
              {"config_hash", config_hash(cfg)},
              {"base_seed", base_seed}};
}

DictPtr make_dictionary(int mu, int m, int n, hibd_u_kind u, hibd_a_kind a, std::uint64_t seed) {
  hibd_ensemble_config ec{mu, m, n, u, a, seed};
  hibd_dictionary* d = nullptr;
  check(hibd_dictionary_generate(&ec, &d));
  return DictPtr(d);
}

std::vector<double> signal_values(const hibd_signal* s) {
  const double* data = nullptr;
  size_t len = 0;
  check(hibd_signal_data(s, &data, &len));
  return std::vector<double>(data, data + len);
}

// Support as [user, block, index] (three level) or [block, index] triples.
json support_json(const hibd_result* r, int users, int blocks, int block_len) {
  const size_t* flat = nullptr;
  size_t count = 0;
  check(hibd_result_support(r, &flat, &count));
  json out = json::array();
  for (size_t i = 0; i < count; ++i) {
    const size_t f = flat[i];
    const int index = static_cast<int>(f % block_len);
    const int block = static_cast<int>((f / block_len) % blocks);
    const int user = static_cast<int>(f / (static_cast<size_t>(block_len) * blocks));
    out.push_back(users > 1 ? json::array({user, block, index}) : json::array({block, index}));
  }
  return out;
}

json truth_support_json(const std::vector<double>& values, int users, int blocks, int block_len) {
  json out = json::array();
  for (size_t f = 0; f < values.size(); ++f) {
    if (values[f] == 0.0) continue;
    const int index = static_cast<int>(f % block_len);
    const int block = static_cast<int>((f / block_len) % blocks);
    const int user = static_cast<int>(f / (static_cast<size_t>(block_len) * blocks));
    out.push_back(users > 1 ? json::array({user, block, index}) : json::array({block, index}));
  }
  return out;
}

json solve_info_json(const hibd_result* r) {
  hibd_solve_info info;
  check(hibd_result_info(r, &info));
  return json{{"outer_iters", info.outer_iters},
              {"converged", info.converged != 0},
              {"final_rel_residual", info.final_rel_residual},
              {"final_ls_iters", info.final_ls_iters}};
}

std::string base_seed_from_preamble(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  const std::string key = "# base_seed ";
  while (std::getline(in, line)) {
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
    if (line.empty() || line.front() != '#') break;
  }
  return {};
}

std::string format_a(double a) {
  std::ostringstream ss;
  ss << a;
  return ss.str();
}

}  // namespace

ApiError::ApiError(hibd_status status, const std::string& msg)
    : std::runtime_error(std::string(hibd_status_name(status)) + ": " + msg), status_(status) {}

int ApiError::exit_code() const {
  return (status_ == HIBD_ERR_NUMERIC || status_ == HIBD_ERR_INTERNAL) ? kExitNumeric : kExitUsage;
}

int cmd_deconvolve(const json& cfg) {
  const int mu = cfg.at("mu").get<int>();
  const int n = cfg.at("n").get<int>();
  const int m = cfg.at("m").get<int>() == 0 ? n : cfg.at("m").get<int>();
  const int s = cfg.at("s").get<int>();
  const int sigma = cfg.at("sigma").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const hibd_solver_config sc = solver(cfg);

  const DictPtr dict = make_dictionary(mu, m, n, u_kind(cfg), a_kind(cfg), derive(seed, 0));
  hibd_signal* truth_raw = nullptr;
  check(hibd_ground_truth(mu, n, s, sigma, derive(seed, 1), &truth_raw));
  const SignalPtr truth(truth_raw);

  std::vector<double> y(static_cast<size_t>(mu));
  check(hibd_apply_lifted(dict.get(), HIBD_LIFT_CONVOLUTION, truth.get(), y.data(), y.size()));
  hibd_result* res_raw = nullptr;
  check(hibd_solve_deconvolution(dict.get(), HIBD_LIFT_CONVOLUTION, y.data(), y.size(), s, sigma, &sc, &res_raw));
  const ResultPtr res(res_raw);

  const hibd_signal* est = nullptr;
  check(hibd_result_estimate(res.get(), &est));
  double rel = 0.0;
  check(hibd_relative_error(est, truth.get(), &rel));
  const bool success = rel < kRecoveryThreshold;

  json out{{"meta", meta(cfg, seed)}, {"config", run_config(cfg)}};
  json result = solve_info_json(res.get());
  result["success"] = success;
  result["rel_error"] = rel;
  result["shape"] = json::array({mu, n});
  result["support"] = support_json(res.get(), 1, mu, n);
  result["truth_support"] = truth_support_json(signal_values(truth.get()), 1, mu, n);
  result["estimate"] = signal_values(est);
  out["result"] = result;
  write_output(cfg.at("out").get<std::string>(), out.dump(2) + "\n");
  if (cfg.at("verbose").get<bool>())
    std::cerr << "deconvolve: rel_error " << rel << (success ? " (recovered)" : " (not recovered)") << "\n";
  return success ? kExitOk : kExitRecoveryFailure;
}

int cmd_demix(const json& cfg) {
  const int users = cfg.at("users").get<int>();
  const int active = cfg.at("active").get<int>();
  const int rows = cfg.at("rows").get<int>();
  const int mu = cfg.at("mu").get<int>();
  const int n = cfg.at("n").get<int>();
  const int s = cfg.at("s").get<int>();
  const int sigma = cfg.at("sigma").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const hibd_solver_config sc = solver(cfg);
  if (users < 1 || rows < 1) throw ConfigError("users and rows must be >= 1");

  std::vector<double> mixing(static_cast<size_t>(rows) * users);
  check(hibd_mixing_generate(rows, users, derive(seed, 0), mixing.data(), mixing.size()));
  const DictPtr dict = make_dictionary(mu, n, n, u_kind(cfg), HIBD_A_IDENTITY, derive(seed, 1));
  hibd_signal* truth_raw = nullptr;
  std::vector<int> active_users(static_cast<size_t>(std::max(active, 0)));
  check(hibd_demix_ground_truth(users, active, mu, n, s, sigma, derive(seed, 2), &truth_raw, active_users.data()));
  const SignalPtr truth(truth_raw);

  std::vector<double> y(static_cast<size_t>(rows) * mu);
  check(hibd_apply_demix(mixing.data(), rows, users, dict.get(), truth.get(), y.data(), y.size()));
  hibd_result* res_raw = nullptr;
  check(hibd_solve_demixing(mixing.data(), rows, users, dict.get(), y.data(), y.size(), active, s, sigma, &sc,
                            &res_raw));
  const ResultPtr res(res_raw);

  const hibd_signal* est = nullptr;
  check(hibd_result_estimate(res.get(), &est));
  double rel = 0.0;
  check(hibd_relative_error(est, truth.get(), &rel));
  const std::vector<double> ev = signal_values(est);
  const std::vector<double> tv = signal_values(truth.get());
  const size_t per_user = static_cast<size_t>(mu) * n;
  bool success = true;
  json user_errors = json::object();
  for (int p : active_users) {
    double diff = 0.0, norm = 0.0;
    for (size_t i = p * per_user; i < (p + 1) * per_user; ++i) {
      diff += (ev[i] - tv[i]) * (ev[i] - tv[i]);
      norm += tv[i] * tv[i];
    }
    const double e = std::sqrt(diff) / std::sqrt(norm);
    user_errors[std::to_string(p)] = e;
    success = success && e < kRecoveryThreshold;
  }

  json out{{"meta", meta(cfg, seed)}, {"config", run_config(cfg)}};
  json result = solve_info_json(res.get());
  result["success"] = success;
  result["rel_error"] = rel;
  result["active_users"] = active_users;
  result["user_errors"] = user_errors;
  result["shape"] = json::array({users, mu, n});
  result["support"] = support_json(res.get(), users, mu, n);
  result["truth_support"] = truth_support_json(tv, users, mu, n);
  result["estimate"] = ev;
  out["result"] = result;
  write_output(cfg.at("out").get<std::string>(), out.dump(2) + "\n");
  if (cfg.at("verbose").get<bool>())
    std::cerr << "demix: rel_error " << rel << (success ? " (recovered)" : " (not recovered)") << "\n";
  return success ? kExitOk : kExitRecoveryFailure;
}

int cmd_phase(const json& cfg) {
  const auto n_values = cfg.at("n_values").get<std::vector<int>>();
  const auto sigma_values = cfg.at("sigma_values").get<std::vector<int>>();
  const auto s_values = cfg.at("s_values").get<std::vector<int>>();
  const auto mu_values = cfg.at("mu_values").get<std::vector<int>>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const bool verbose = cfg.at("verbose").get<bool>();

  hibd_phase_grid grid{};
  grid.n_values = n_values.data();
  grid.n_count = n_values.size();
  grid.sigma_values = sigma_values.data();
  grid.sigma_count = sigma_values.size();
  grid.s_values = s_values.data();
  grid.s_count = s_values.size();
  grid.mu_values = mu_values.data();
  grid.mu_count = mu_values.size();
  grid.trials_per_point = cfg.at("trials").get<int>();
  grid.base_seed = seed;
  grid.u_kind = u_kind(cfg);
  grid.solver = solver(cfg);
  grid.record_timing = cfg.at("timing").get<bool>() ? 1 : 0;

  struct Counter {
    size_t per_point;
  } counter{static_cast<size_t>(std::max(grid.trials_per_point, 1))};
  hibd_progress_fn progress = nullptr;
  if (verbose) {
    progress = [](size_t done, size_t total, void* user) {
      const size_t per = static_cast<Counter*>(user)->per_point;
      if (done % per == 0 || done == total)
        std::cerr << "phase: " << done / per << "/" << total / per << " points\n";
    };
  }
  hibd_phase_table* table_raw = nullptr;
  check(hibd_phase_run(&grid, cfg.at("threads").get<int>(), progress, &counter, &table_raw));
  const TablePtr table(table_raw);

  size_t rows = 0;
  check(hibd_phase_table_rows(table.get(), &rows));
  int numeric = 0;
  for (size_t i = 0; i < rows; ++i) {
    hibd_phase_row row;
    check(hibd_phase_table_row(table.get(), i, &row));
    numeric += row.numeric_failures;
  }
  if (numeric > 0)
    std::cerr << "phase: warning: " << numeric << " trials hit non-finite values and were counted as failures\n";

  const std::string l0 = std::string("tool hibd ") + hibd_version();
  const std::string l1 = "config_hash " + config_hash(cfg);
  const std::string l2 = "base_seed " + std::to_string(seed);
  const std::string l3 = "config " + canonical(cfg);
  const char* preamble[] = {l0.c_str(), l1.c_str(), l2.c_str(), l3.c_str()};
  char* csv_raw = nullptr;
  check(hibd_phase_table_to_csv(table.get(), preamble, 4, &csv_raw));
  const StringPtr csv(csv_raw);
  write_output(cfg.at("out").get<std::string>(), csv.get());
  return kExitOk;
}

int cmd_fit(const json& cfg) {
  const std::string text = read_file(cfg.at("table").get<std::string>());
  hibd_phase_table* table_raw = nullptr;
  check(hibd_phase_table_from_csv(text.c_str(), &table_raw));
  const TablePtr table(table_raw);

  const auto a_values = cfg.at("a_values").get<std::vector<double>>();
  const auto c_grid = cfg.at("c_grid").get<std::vector<double>>();
  if (a_values.empty()) throw ConfigError("--a needs at least one exponent");
  const std::string prefix = cfg.at("plot_prefix").get<std::string>();

  json fits = json::array();
  for (double a : a_values) {
    hibd_logistic_fit f;
    check(hibd_fit_lambda_scaling(table.get(), a, c_grid.empty() ? nullptr : c_grid.data(), c_grid.size(), &f));
    fits.push_back(json{{"a", f.a},
                        {"c_a", f.c_a},
                        {"intercept", f.intercept},
                        {"slope", f.slope},
                        {"loss", f.loss},
                        {"separated", f.separated != 0},
                        {"se_intercept", f.se_intercept},
                        {"se_slope", f.se_slope}});
    if (!prefix.empty()) {
      char* csv_raw = nullptr;
      check(hibd_lambda_outcomes_csv(table.get(), a, f.c_a, &csv_raw));
      const StringPtr csv(csv_raw);
      write_output(prefix + "_a" + format_a(a) + ".csv", csv.get());
    }
  }

  std::uint64_t base = cfg.at("seed").get<std::uint64_t>();
  const std::string from_table = base_seed_from_preamble(text);
  if (!from_table.empty()) {
    try {
      base = std::stoull(from_table);
    } catch (const std::exception&) {
      throw ConfigError("table has a malformed base_seed line");
    }
  }
  json out{{"meta", meta(cfg, base)}, {"config", run_config(cfg)}, {"fits", fits}};
  write_output(cfg.at("out").get<std::string>(), out.dump(2) + "\n");
  if (cfg.at("verbose").get<bool>())
    for (const auto& f : fits) std::cerr << "fit: a=" << f["a"] << " loss=" << f["loss"] << " C_a=" << f["c_a"] << "\n";
  return kExitOk;
}

int cmd_ripcheck(const json& cfg) {
  const int mu = cfg.at("mu").get<int>();
  const int n = cfg.at("n").get<int>();
  const int m = cfg.at("m").get<int>() == 0 ? n : cfg.at("m").get<int>();
  const int s = cfg.at("s").get<int>();
  const int sigma = cfg.at("sigma").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const double guard = cfg.at("guard").get<double>();
  if (!(guard > 0.0)) throw ConfigError("--guard must be > 0");

  const DictPtr dict = make_dictionary(mu, m, n, u_kind(cfg), a_kind(cfg), derive(seed, 0));
  hibd_rip_report rep;
  check(hibd_ripcheck_lifted(dict.get(), lifting(cfg), s, sigma, cfg.at("trials").get<int>(), derive(seed, 1),
                             cfg.at("exact").get<bool>() ? 1 : 0, guard, &rep));

  json out{{"meta", meta(cfg, seed)}, {"config", run_config(cfg)}};
  out["pattern"] = json{{"s", rep.s}, {"sigma", rep.sigma}};
  out["trials"] = rep.trials;
  out["delta_lower"] = rep.delta_lower;
  out["exact"] = rep.has_exact ? json(rep.exact) : json(nullptr);
  out["seed"] = seed;
  out["mc_seed"] = rep.seed;
  if (cfg.at("factorization").get<bool>()) {
    hibd_factorization_report fr;
    check(hibd_check_factorization(dict.get(), s, sigma, guard, &fr));
    out["factorization"] = json{{"delta_h", fr.delta_h},
                                {"delta_a", fr.delta_a},
                                {"delta_hat", fr.delta_hat},
                                {"bound", fr.bound},
                                {"holds", fr.holds != 0}};
  }
  write_output(cfg.at("out").get<std::string>(), out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace hibd_cli
