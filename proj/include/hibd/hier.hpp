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

// Hierarchically sparse signals.
//
// A two-level signal lives in R^mu (x) R^n and is stored as mu contiguous
// blocks of length n. The three-level (demixing) signal adds an outer
// "user" axis: N groups of mu blocks. Flat storage is always
// ((user * mu) + block) * n + index, so a two-level signal is simply the
// users == 1 case.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hibd {

struct Shape {
  int users = 1;
  int blocks = 0;
  int block_len = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(users) * blocks * block_len;
  }
  std::size_t index(int user, int block, int i) const {
    return (static_cast<std::size_t>(user) * blocks + block) * block_len + i;
  }
  bool three_level() const { return users > 1; }
  bool operator==(const Shape&) const = default;

  // Throws ShapeError on non-positive dimensions.
  void validate() const;
};

// Budget of a hierarchical support: at most `s` active blocks holding at
// most `sigma` entries each. `users_active` (S) bounds the number of active
// users in the three-level case.
struct SparsityPattern {
  int s = 1;
  int sigma = 1;
  std::optional<int> users_active;

  // Throws ShapeError unless the pattern fits inside `shape`.
  void validate(const Shape& shape) const;
  bool operator==(const SparsityPattern&) const = default;
};

class HierSignal {
 public:
  HierSignal() = default;
  HierSignal(int blocks, int block_len);
  explicit HierSignal(Shape shape);
  HierSignal(Shape shape, Eigen::VectorXd data);

  // Lifted rank-one tensor h (x) b: block k equals h_k * b.
  static HierSignal outer(const Eigen::VectorXd& h, const Eigen::VectorXd& b);

  const Shape& shape() const { return shape_; }
  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  auto block(int k) const { return data_.segment(static_cast<Eigen::Index>(k) * shape_.block_len, shape_.block_len); }
  auto block(int k) { return data_.segment(static_cast<Eigen::Index>(k) * shape_.block_len, shape_.block_len); }
  auto block(int user, int k) const {
    return data_.segment(static_cast<Eigen::Index>(shape_.index(user, k, 0)), shape_.block_len);
  }
  auto block(int user, int k) {
    return data_.segment(static_cast<Eigen::Index>(shape_.index(user, k, 0)), shape_.block_len);
  }
  // Two-level view of a single user of a three-level signal.
  HierSignal user(int p) const;

  double norm() const { return data_.norm(); }

 private:
  Shape shape_{};
  Eigen::VectorXd data_;
};

struct SupportEntry {
  int user;
  int block;
  int index;
  bool operator==(const SupportEntry&) const = default;
};

// Set of flat coordinates, kept sorted so entries are grouped by user and
// block.
class HierSupport {
 public:
  HierSupport() = default;
  explicit HierSupport(Shape shape) : shape_(shape) {}
  // Sorts `flat`; throws ShapeError on out-of-range or duplicate indices.
  HierSupport(Shape shape, std::vector<std::size_t> flat);

  const Shape& shape() const { return shape_; }
  const std::vector<std::size_t>& flat() const { return flat_; }
  std::size_t size() const { return flat_.size(); }
  bool empty() const { return flat_.empty(); }
  SupportEntry entry(std::size_t i) const;
  std::vector<SupportEntry> entries() const;

  int active_users() const;
  // Largest number of distinct blocks touched within any one user.
  int max_blocks_per_user() const;
  int max_entries_per_block() const;
  bool satisfies(const SparsityPattern& p) const;

  bool operator==(const HierSupport&) const = default;

 private:
  Shape shape_{};
  std::vector<std::size_t> flat_;
};

struct Projection {
  HierSupport support;
  HierSignal signal;
};

// Best pattern-sparse approximation. Each block keeps its sigma largest
// magnitudes, the s blocks with the largest kept energy survive, and (three
// level) the S users with the largest surviving energy survive. Ties prefer
// the lowest index; the support is always padded to exactly S*s*sigma
// coordinates.
Projection project_hier(const HierSignal& w, const SparsityPattern& p);

// Exhaustive oracle for project_hier. Refuses with GuardExceeded when more
// than `guard` supports would be enumerated.
Projection brute_force_project(const HierSignal& w, const SparsityPattern& p,
                               double guard = 1e6);

// Number of maximal supports (exactly S users, s blocks, sigma entries).
double count_supports(const Shape& shape, const SparsityPattern& p);

// Calls `visit` once per maximal support, flat indices in increasing order.
void for_each_support(const Shape& shape, const SparsityPattern& p,
                      const std::function<void(std::span<const std::size_t>)>& visit);

Eigen::VectorXd restrict(const HierSignal& w, const HierSupport& omega);
HierSignal embed(const Eigen::VectorXd& v, const HierSupport& omega);
double captured_energy(const HierSignal& w, const HierSupport& omega);

}  // namespace hibd
