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
#include "hibd/phase.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "hibd/error.hpp"
#include "hibd/random.hpp"

namespace hibd {

namespace {

constexpr const char* kCsvHeader = "n,mu,s,sigma,trials,successes,prob,mean_iters,mean_ms";

struct GridPoint {
  int n, mu, s, sigma;
};

std::vector<GridPoint> enumerate(const ExperimentGrid& g) {
  std::vector<GridPoint> pts;
  for (int n : g.n_values)
    for (int sigma : g.sigma_values)
      for (int s : g.s_values)
        for (int mu : g.mu_values) pts.push_back({n, mu, s, sigma});
  return pts;
}

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

struct Grouped {
  const std::vector<double>& x;
  const std::vector<double>& k;  // successes
  const std::vector<double>& t;  // trials
  double total = 0.0;

  double loss(double b0, double b1) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double eta = b0 + b1 * x[j];
      acc += t[j] * softplus(eta) - k[j] * eta;
    }
    return acc / total;
  }
};

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_field(std::string_view f, std::size_t line) {
  T v{};
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size())
    throw InvalidArgument("phase table line " + std::to_string(line) + ": bad field '" + std::string(f) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void ExperimentGrid::validate() const {
  if (n_values.empty() || sigma_values.empty() || s_values.empty() || mu_values.empty())
    throw InvalidArgument("experiment grid lists must be non-empty");
  if (trials_per_point < 1) throw InvalidArgument("trials_per_point must be >= 1");
  solver.validate();
  for (int n : n_values)
    if (n < 2) throw InvalidArgument("grid n values must be >= 2");
  for (int v : sigma_values)
    if (v < 1) throw InvalidArgument("grid sigma values must be >= 1");
  for (int v : s_values)
    if (v < 1) throw InvalidArgument("grid s values must be >= 1");
  for (int mu : mu_values)
    if (mu < 2) throw InvalidArgument("grid mu values must be >= 2");
  const int max_s = *std::max_element(s_values.begin(), s_values.end());
  const int min_mu = *std::min_element(mu_values.begin(), mu_values.end());
  const int max_sigma = *std::max_element(sigma_values.begin(), sigma_values.end());
  const int min_n = *std::min_element(n_values.begin(), n_values.end());
  if (max_s > min_mu)
    throw InvalidArgument("grid has s = " + std::to_string(max_s) + " > mu = " + std::to_string(min_mu));
  if (max_sigma > min_n)
    throw InvalidArgument("grid has sigma = " + std::to_string(max_sigma) + " > n = " + std::to_string(min_n));
}

std::uint64_t trial_seed(std::uint64_t base, int n, int mu, int s, int sigma, int t) {
  return derive_seed(base, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(mu),
                            static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(sigma),
                            static_cast<std::uint64_t>(t)});
}

TrialOutcome run_trial(int n, int mu, int s, int sigma, std::uint64_t seed, UKind u_kind, const SolverConfig& cfg,
                       bool record_timing) {
  const auto start = std::chrono::steady_clock::now();
  EnsembleConfig ec;
  ec.mu = mu;
  ec.m = n;
  ec.n = n;
  ec.u_kind = u_kind;
  ec.a_kind = AKind::kIdentity;
  ec.seed = derive_seed(seed, {0});
  auto dict = std::make_shared<const Dictionary>(gen_dictionary(ec));
  const GroundTruth truth = gen_ground_truth(mu, n, s, sigma, derive_seed(seed, {1}));
  const Eigen::VectorXd y = apply_C(*dict, truth.lifted);
  const LiftedOperator op(dict, Lifting::kConvolution);

  TrialOutcome out;
  try {
    const SolveResult res = hihtp(op, y, SparsityPattern{s, sigma, std::nullopt}, cfg);
    out.outer_iters = res.outer_iters;
    out.rel_error = relative_error(res.estimate, truth.lifted);
    out.success = out.rel_error < kRecoveryThreshold;
  } catch (const NumericError&) {
    out.numeric_failure = true;
    out.rel_error = std::numeric_limits<double>::infinity();
  }
  if (record_timing)
    out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

DemixTrialOutcome run_demix_trial(int users, int active, int rows, int mu, int n, int s, int sigma,
                                  std::uint64_t seed, UKind u_kind, const SolverConfig& cfg) {
  const Eigen::MatrixXd mixing = gen_mixing(rows, users, derive_seed(seed, {0}));
  EnsembleConfig ec;
  ec.mu = mu;
  ec.m = n;
  ec.n = n;
  ec.u_kind = u_kind;
  ec.a_kind = AKind::kIdentity;
  ec.seed = derive_seed(seed, {1});
  auto dict = std::make_shared<const Dictionary>(gen_dictionary(ec));
  const DemixGroundTruth truth = gen_demix_ground_truth(users, active, mu, n, s, sigma, derive_seed(seed, {2}));
  const DemixingOperator op(mixing, dict);
  const Eigen::VectorXd y = op.apply(truth.lifted);

  DemixTrialOutcome out;
  out.active_users = truth.active_users;
  try {
    const SolveResult res = hihtp_three_level(op, y, SparsityPattern{s, sigma, active}, cfg);
    out.outer_iters = res.outer_iters;
    out.rel_error = relative_error(res.estimate, truth.lifted);
    out.success = true;
    for (int p : truth.active_users) {
      const double tn = truth.lifted.user(p).norm();
      const double e = (res.estimate.user(p).data() - truth.lifted.user(p).data()).norm() / tn;
      out.user_errors.push_back(e);
      out.success = out.success && e < kRecoveryThreshold;
    }
  } catch (const NumericError&) {
    out.numeric_failure = true;
    out.rel_error = std::numeric_limits<double>::infinity();
  }
  return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

PhaseTable run_phase_diagram(const ExperimentGrid& grid, int threads, const ProgressFn& progress) {
  grid.validate();
  const std::vector<GridPoint> pts = enumerate(grid);
  const auto trials = static_cast<std::size_t>(grid.trials_per_point);
  const std::size_t total = pts.size() * trials;
  std::vector<TrialOutcome> outcomes(total);

  std::mutex progress_mu;
  std::size_t done = 0;
  parallel_for(total, threads, [&](std::size_t idx) {
    const GridPoint& pt = pts[idx / trials];
    const int t = static_cast<int>(idx % trials);
    const std::uint64_t seed = trial_seed(grid.base_seed, pt.n, pt.mu, pt.s, pt.sigma, t);
    outcomes[idx] = run_trial(pt.n, pt.mu, pt.s, pt.sigma, seed, grid.u_kind, grid.solver, grid.record_timing);
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mu);
      progress(++done, total);
    }
  });

  PhaseTable table;
  table.rows.reserve(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    PhasePoint row;
    row.n = pts[p].n;
    row.mu = pts[p].mu;
    row.s = pts[p].s;
    row.sigma = pts[p].sigma;
    row.trials = grid.trials_per_point;
    double iters = 0.0;
    double ms = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[p * trials + t];
      row.successes += o.success ? 1 : 0;
      row.numeric_failures += o.numeric_failure ? 1 : 0;
      iters += o.outer_iters;
      ms += o.ms;
    }
    row.success_prob = static_cast<double>(row.successes) / row.trials;
    row.mean_outer_iters = iters / row.trials;
    row.mean_ms = ms / row.trials;
    table.rows.push_back(row);
  }
  return table;
}

double lambda_value(double mu, double s, double sigma, double n, double a, double c) {
  if (!(mu > 0.0) || !(s > 0.0) || !(sigma > 0.0) || !(n > 0.0) || !(a > 0.0))
    throw InvalidArgument("lambda_value needs positive mu, s, sigma, n and a");
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("lambda_value needs a finite C >= 0");
  const double denom = std::pow(s, a) * sigma * std::log(n) + c * s * std::log(mu);
  if (!(denom > 0.0)) throw InvalidArgument("lambda_value denominator is not positive");
  return mu / denom;
}

LogisticFit fit_logistic(const std::vector<double>& x, const std::vector<double>& successes,
                         const std::vector<double>& trials) {
  if (x.size() != successes.size() || x.size() != trials.size())
    throw ShapeError("fit_logistic: x, successes and trials differ in length");
  Grouped raw{x, successes, trials};
  double min_succ_x = std::numeric_limits<double>::infinity(), max_succ_x = -min_succ_x;
  double min_fail_x = min_succ_x, max_fail_x = -min_succ_x;
  double sx = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j]) || !(trials[j] >= 0.0) || successes[j] < 0.0 || successes[j] > trials[j])
      throw InvalidArgument("fit_logistic: need finite x and 0 <= successes <= trials");
    raw.total += trials[j];
    sx += trials[j] * x[j];
    if (successes[j] > 0.0) {
      min_succ_x = std::min(min_succ_x, x[j]);
      max_succ_x = std::max(max_succ_x, x[j]);
    }
    if (successes[j] < trials[j]) {
      min_fail_x = std::min(min_fail_x, x[j]);
      max_fail_x = std::max(max_fail_x, x[j]);
    }
  }
  if (!(raw.total > 0.0)) throw InvalidArgument("fit_logistic: no trials");

  LogisticFit fit;
  const bool any_succ = std::isfinite(min_succ_x);
  const bool any_fail = std::isfinite(min_fail_x);
  // Capped fits: the likelihood has no maximiser, so pick a steep curve with
  // |eta| = 20 at the closest points of the two classes.
  if (!any_succ || !any_fail) {
    fit.separated = true;
    fit.intercept = any_succ ? 20.0 : -20.0;
    fit.loss = raw.loss(fit.intercept, 0.0);
    return fit;
  }
  if (max_fail_x < min_succ_x || max_succ_x < min_fail_x) {
    const bool up = max_fail_x < min_succ_x;
    const double lo = up ? max_fail_x : max_succ_x;
    const double hi = up ? min_succ_x : min_fail_x;
    fit.separated = true;
    fit.slope = (up ? 40.0 : -40.0) / (hi - lo);
    fit.intercept = -fit.slope * 0.5 * (lo + hi);
    fit.loss = raw.loss(fit.intercept, fit.slope);
    return fit;
  }

  // Newton on standardized x.
  const double mean = sx / raw.total;
  double var = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) var += trials[j] * (x[j] - mean) * (x[j] - mean);
  const double sd = std::sqrt(var / raw.total);
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean) / sd;
  Grouped std_data{z, successes, trials, raw.total};

  double b0 = 0.0, b1 = 0.0;
  double cur = std_data.loss(b0, b1);
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0.0, g1 = 0.0;
    h00 = h01 = h11 = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double pr = sigmoid(b0 + b1 * z[j]);
      const double r = trials[j] * pr - successes[j];
      const double w = trials[j] * pr * (1.0 - pr);
      g0 += r;
      g1 += r * z[j];
      h00 += w;
      h01 += w * z[j];
      h11 += w * z[j] * z[j];
    }
    g0 /= raw.total;
    g1 /= raw.total;
    fit.iterations = it;
    if (std::hypot(g0, g1) < 1e-10) {
      converged = true;
      break;
    }
    const double det = (h00 * h11 - h01 * h01) / (raw.total * raw.total);
    if (!(det > 0.0)) break;
    const double d0 = (h11 * g0 - h01 * g1) / raw.total / det;
    const double d1 = (h00 * g1 - h01 * g0) / raw.total / det;
    double step = 1.0;
    double next = std_data.loss(b0 - d0, b1 - d1);
    while (next > cur && step > 1e-10) {
      step *= 0.5;
      next = std_data.loss(b0 - step * d0, b1 - step * d1);
    }
    b0 -= step * d0;
    b1 -= step * d1;
    cur = next;
  }
  // Quasi-separation (classes overlap only at one x) drives the slope to
  // infinity without a stationary point.
  if (!converged && std::abs(b1) > 30.0) fit.separated = true;

  fit.intercept = b0 - b1 * mean / sd;
  fit.slope = b1 / sd;
  fit.loss = raw.loss(fit.intercept, fit.slope);

  // Standard errors from the inverse observed information, mapped back from
  // standardized coordinates: (intercept, slope) = T (b0, b1).
  const double det = h00 * h11 - h01 * h01;
  if (det > 0.0) {
    const double c00 = h11 / det, c01 = -h01 / det, c11 = h00 / det;
    const double t01 = -mean / sd, t11 = 1.0 / sd;
    const double v_int = c00 + 2.0 * t01 * c01 + t01 * t01 * c11;
    const double v_slope = t11 * t11 * c11;
    fit.se_intercept = std::sqrt(std::max(0.0, v_int));
    fit.se_slope = std::sqrt(std::max(0.0, v_slope));
  } else {
    fit.se_intercept = fit.se_slope = std::numeric_limits<double>::infinity();
  }
  return fit;
}

std::vector<double> default_c_grid() {
  constexpr int kPoints = 40;
  std::vector<double> grid(kPoints);
  const double lo = std::log10(0.1), hi = std::log10(100.0);
  for (int i = 0; i < kPoints; ++i) grid[i] = std::pow(10.0, lo + (hi - lo) * i / (kPoints - 1));
  return grid;
}

LogisticFit fit_lambda_scaling(const PhaseTable& table, double a, const std::vector<double>& c_grid) {
  if (table.rows.empty()) throw InvalidArgument("fit_lambda_scaling: empty phase table");
  if (c_grid.empty()) throw InvalidArgument("fit_lambda_scaling: empty C grid");
  for (double c : c_grid)
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("fit_lambda_scaling: C grid entries must be finite and > 0");

  std::vector<double> x(table.rows.size()), k(table.rows.size()), t(table.rows.size());
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    k[j] = table.rows[j].successes;
    t[j] = table.rows[j].trials;
  }
  std::optional<LogisticFit> best;
  for (double c : c_grid) {
    for (std::size_t j = 0; j < table.rows.size(); ++j) {
      const PhasePoint& r = table.rows[j];
      x[j] = lambda_value(r.mu, r.s, r.sigma, r.n, a, c);
    }
    LogisticFit f = fit_logistic(x, k, t);
    f.a = a;
    f.c_a = c;
    if (!best || f.loss < best->loss) best = f;
  }
  return *best;
}

std::string to_csv(const PhaseTable& table, const std::vector<std::string>& preamble) {
  std::string out;
  for (const auto& line : preamble) out += "# " + line + "\n";
  out += kCsvHeader;
  out += "\n";
  for (const PhasePoint& r : table.rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.mu) + "," + std::to_string(r.s) + "," +
           std::to_string(r.sigma) + "," + std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
           fmt_double(r.success_prob) + "," + fmt_double(r.mean_outer_iters) + "," + fmt_double(r.mean_ms) + "\n";
  }
  return out;
}

PhaseTable parse_csv(std::string_view text) {
  PhaseTable table;
  bool header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw InvalidArgument("phase table header must be '" + std::string(kCsvHeader) + "'");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) throw InvalidArgument("phase table line " + std::to_string(line_no) + ": expected 9 fields");
    PhasePoint r;
    r.n = parse_field<int>(f[0], line_no);
    r.mu = parse_field<int>(f[1], line_no);
    r.s = parse_field<int>(f[2], line_no);
    r.sigma = parse_field<int>(f[3], line_no);
    r.trials = parse_field<int>(f[4], line_no);
    r.successes = parse_field<int>(f[5], line_no);
    r.success_prob = parse_field<double>(f[6], line_no);
    r.mean_outer_iters = parse_field<double>(f[7], line_no);
    r.mean_ms = parse_field<double>(f[8], line_no);
    if (r.trials < 1 || r.successes < 0 || r.successes > r.trials)
      throw InvalidArgument("phase table line " + std::to_string(line_no) + ": need 0 <= successes <= trials, trials >= 1");
    if (r.n < 1 || r.mu < 1 || r.s < 1 || r.sigma < 1)
      throw InvalidArgument("phase table line " + std::to_string(line_no) + ": dimensions must be positive");
    table.rows.push_back(r);
  }
  if (!header) throw InvalidArgument("phase table has no header");
  return table;
}

std::string lambda_outcomes_csv(const PhaseTable& table, double a, double c) {
  std::string out = "lambda,outcome\n";
  for (const PhasePoint& r : table.rows) {
    const std::string lam = fmt_double(lambda_value(r.mu, r.s, r.sigma, r.n, a, c));
    for (int i = 0; i < r.trials; ++i) out += lam + (i < r.successes ? ",1\n" : ",0\n");
  }
  return out;
}

std::vector<double> isotonic_increasing(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw ShapeError("isotonic_increasing: length mismatch");
  struct Block {
    double mean, weight;
    std::size_t len;
  };
  std::vector<Block> stack;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw InvalidArgument("isotonic_increasing: weights must be > 0");
    stack.push_back({values[i], weights[i], 1});
    while (stack.size() > 1 && stack[stack.size() - 2].mean > stack.back().mean) {
      const Block top = stack.back();
      stack.pop_back();
      Block& below = stack.back();
      const double w = below.weight + top.weight;
      below.mean = (below.mean * below.weight + top.mean * top.weight) / w;
      below.weight = w;
      below.len += top.len;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : stack) out.insert(out.end(), b.len, b.mean);
  return out;
}

}  // namespace hibd
