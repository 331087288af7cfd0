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
#include "hibd/hier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hibd/error.hpp"

namespace hibd {

namespace {

// Indices of the k largest scores, ties to the lowest index, returned in
// increasing index order.
std::vector<int> top_k(std::span<const double> score, int k) {
  std::vector<int> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), better);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

int effective_users(const Shape& shape, const SparsityPattern& p) {
  return p.users_active.value_or(shape.users);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

// Advances `c` (sorted, values in [0,n)) to the next k-combination.
bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[i] == n - k + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  return true;
}

std::vector<int> first_combination(int k) {
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  return c;
}

}  // namespace

void Shape::validate() const {
  if (users < 1 || blocks < 1 || block_len < 1)
    throw ShapeError("shape dimensions must be positive (users=" + std::to_string(users) +
                     ", blocks=" + std::to_string(blocks) +
                     ", block_len=" + std::to_string(block_len) + ")");
}

void SparsityPattern::validate(const Shape& shape) const {
  shape.validate();
  if (s < 1 || s > shape.blocks)
    throw ShapeError("block sparsity s=" + std::to_string(s) + " must lie in [1, " +
                     std::to_string(shape.blocks) + "]");
  if (sigma < 1 || sigma > shape.block_len)
    throw ShapeError("within-block sparsity sigma=" + std::to_string(sigma) +
                     " must lie in [1, " + std::to_string(shape.block_len) + "]");
  if (users_active) {
    if (*users_active < 1 || *users_active > shape.users)
      throw ShapeError("user sparsity S=" + std::to_string(*users_active) +
                       " must lie in [1, " + std::to_string(shape.users) + "]");
  } else if (shape.users > 1) {
    throw ShapeError("three-level signal requires a user sparsity S");
  }
}

HierSignal::HierSignal(int blocks, int block_len) : HierSignal(Shape{1, blocks, block_len}) {}

HierSignal::HierSignal(Shape shape) : shape_(shape) {
  shape_.validate();
  data_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape_.size()));
}

HierSignal::HierSignal(Shape shape, Eigen::VectorXd data) : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  if (static_cast<std::size_t>(data_.size()) != shape_.size())
    throw ShapeError("signal data has length " + std::to_string(data_.size()) + ", shape needs " +
                     std::to_string(shape_.size()));
}

HierSignal HierSignal::outer(const Eigen::VectorXd& h, const Eigen::VectorXd& b) {
  HierSignal w(static_cast<int>(h.size()), static_cast<int>(b.size()));
  for (Eigen::Index k = 0; k < h.size(); ++k) w.block(static_cast<int>(k)) = h[k] * b;
  return w;
}

HierSignal HierSignal::user(int p) const {
  if (p < 0 || p >= shape_.users) throw ShapeError("user index out of range");
  Shape two{1, shape_.blocks, shape_.block_len};
  return HierSignal(two, data_.segment(static_cast<Eigen::Index>(shape_.index(p, 0, 0)),
                                       static_cast<Eigen::Index>(two.size())));
}

HierSupport::HierSupport(Shape shape, std::vector<std::size_t> flat)
    : shape_(shape), flat_(std::move(flat)) {
  std::sort(flat_.begin(), flat_.end());
  if (std::adjacent_find(flat_.begin(), flat_.end()) != flat_.end())
    throw ShapeError("support contains duplicate coordinates");
  if (!flat_.empty() && flat_.back() >= shape_.size())
    throw ShapeError("support coordinate " + std::to_string(flat_.back()) +
                     " out of range for signal of size " + std::to_string(shape_.size()));
}

SupportEntry HierSupport::entry(std::size_t i) const {
  const std::size_t f = flat_.at(i);
  const std::size_t n = shape_.block_len;
  const std::size_t mu = shape_.blocks;
  return {static_cast<int>(f / (n * mu)), static_cast<int>((f / n) % mu), static_cast<int>(f % n)};
}

std::vector<SupportEntry> HierSupport::entries() const {
  std::vector<SupportEntry> out;
  out.reserve(flat_.size());
  for (std::size_t i = 0; i < flat_.size(); ++i) out.push_back(entry(i));
  return out;
}

int HierSupport::active_users() const {
  int count = 0;
  int last = -1;
  for (const auto& e : entries()) {
    if (e.user != last) ++count;
    last = e.user;
  }
  return count;
}

int HierSupport::max_blocks_per_user() const {
  int best = 0;
  int count = 0;
  SupportEntry last{-1, -1, -1};
  for (const auto& e : entries()) {
    if (e.user != last.user) count = 0;
    if (e.user != last.user || e.block != last.block) ++count;
    best = std::max(best, count);
    last = e;
  }
  return best;
}

int HierSupport::max_entries_per_block() const {
  int best = 0;
  int count = 0;
  SupportEntry last{-1, -1, -1};
  for (const auto& e : entries()) {
    if (e.user != last.user || e.block != last.block) count = 0;
    best = std::max(best, ++count);
    last = e;
  }
  return best;
}

bool HierSupport::satisfies(const SparsityPattern& p) const {
  return active_users() <= effective_users(shape_, p) && max_blocks_per_user() <= p.s &&
         max_entries_per_block() <= p.sigma;
}

Projection project_hier(const HierSignal& w, const SparsityPattern& p) {
  const Shape& shape = w.shape();
  p.validate(shape);
  const int n = shape.block_len;
  const int mu = shape.blocks;

  std::vector<std::vector<std::size_t>> kept(shape.users);
  std::vector<double> user_energy(shape.users, 0.0);
  std::vector<double> magnitude(n);
  std::vector<double> block_energy(mu);
  std::vector<std::vector<int>> block_entries(mu);

  for (int u = 0; u < shape.users; ++u) {
    for (int k = 0; k < mu; ++k) {
      const auto blk = w.block(u, k);
      for (int i = 0; i < n; ++i) magnitude[i] = std::abs(blk[i]);
      block_entries[k] = top_k(magnitude, p.sigma);
      double e = 0.0;
      for (int i : block_entries[k]) e += blk[i] * blk[i];
      block_energy[k] = e;
    }
    double total = 0.0;
    for (int k : top_k(block_energy, p.s)) {
      total += block_energy[k];
      for (int i : block_entries[k]) kept[u].push_back(shape.index(u, k, i));
    }
    user_energy[u] = total;
  }

  std::vector<std::size_t> flat;
  for (int u : top_k(user_energy, effective_users(shape, p)))
    flat.insert(flat.end(), kept[u].begin(), kept[u].end());

  HierSupport support(shape, std::move(flat));
  HierSignal signal(shape);
  for (std::size_t f : support.flat()) signal.data()[f] = w.data()[f];
  return {std::move(support), std::move(signal)};
}

double count_supports(const Shape& shape, const SparsityPattern& p) {
  const int big_s = effective_users(shape, p);
  const double per_user = binomial(shape.blocks, p.s) * std::pow(binomial(shape.block_len, p.sigma), p.s);
  return binomial(shape.users, big_s) * std::pow(per_user, big_s);
}

void for_each_support(const Shape& shape, const SparsityPattern& p,
                      const std::function<void(std::span<const std::size_t>)>& visit) {
  p.validate(shape);
  const int big_s = effective_users(shape, p);
  std::vector<std::size_t> flat;
  flat.reserve(static_cast<std::size_t>(big_s) * p.s * p.sigma);

  // Recursion over (user slot, block slot): each level picks a combination
  // and hands the rest of the work to the next level.
  std::function<void(const std::vector<int>&, std::size_t)> over_users;
  std::function<void(const std::vector<int>&, std::size_t, const std::vector<int>&, std::size_t)>
      over_blocks;

  over_blocks = [&](const std::vector<int>& users, std::size_t ui, const std::vector<int>& blocks,
                    std::size_t bi) {
    if (bi == blocks.size()) {
      over_users(users, ui + 1);
      return;
    }
    auto entries = first_combination(p.sigma);
    do {
      const std::size_t mark = flat.size();
      for (int i : entries) flat.push_back(shape.index(users[ui], blocks[bi], i));
      over_blocks(users, ui, blocks, bi + 1);
      flat.resize(mark);
    } while (next_combination(entries, shape.block_len));
  };

  over_users = [&](const std::vector<int>& users, std::size_t ui) {
    if (ui == users.size()) {
      visit(flat);
      return;
    }
    auto blocks = first_combination(p.s);
    do {
      over_blocks(users, ui, blocks, 0);
    } while (next_combination(blocks, shape.blocks));
  };

  auto users = first_combination(big_s);
  do {
    over_users(users, 0);
  } while (next_combination(users, shape.users));
}

Projection brute_force_project(const HierSignal& w, const SparsityPattern& p, double guard) {
  const Shape& shape = w.shape();
  p.validate(shape);
  const double count = count_supports(shape, p);
  if (count > guard)
    throw GuardExceeded("brute-force projection would enumerate " + std::to_string(count) +
                        " supports (guard " + std::to_string(guard) + ")");

  std::vector<std::size_t> best;
  double best_energy = -1.0;
  for_each_support(shape, p, [&](std::span<const std::size_t> flat) {
    double e = 0.0;
    for (std::size_t f : flat) e += w.data()[f] * w.data()[f];
    if (e > best_energy) {
      best_energy = e;
      best.assign(flat.begin(), flat.end());
    }
  });

  HierSupport support(shape, std::move(best));
  HierSignal signal(shape);
  for (std::size_t f : support.flat()) signal.data()[f] = w.data()[f];
  return {std::move(support), std::move(signal)};
}

Eigen::VectorXd restrict(const HierSignal& w, const HierSupport& omega) {
  if (!(w.shape() == omega.shape())) throw ShapeError("support shape does not match signal");
  Eigen::VectorXd v(static_cast<Eigen::Index>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) v[static_cast<Eigen::Index>(i)] = w.data()[omega.flat()[i]];
  return v;
}

HierSignal embed(const Eigen::VectorXd& v, const HierSupport& omega) {
  if (static_cast<std::size_t>(v.size()) != omega.size())
    throw ShapeError("embed: vector length " + std::to_string(v.size()) + " != support size " +
                     std::to_string(omega.size()));
  HierSignal w(omega.shape());
  for (std::size_t i = 0; i < omega.size(); ++i) w.data()[omega.flat()[i]] = v[static_cast<Eigen::Index>(i)];
  return w;
}

double captured_energy(const HierSignal& w, const HierSupport& omega) {
  return restrict(w, omega).squaredNorm();
}

}  // namespace hibd
