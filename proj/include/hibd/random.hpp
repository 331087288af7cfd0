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

// Reproducible random streams.
//
// Every random object in the library is a pure function of a 64-bit seed.
// Seeds for sub-streams are derived with derive_seed():
//
//   h_0     = mix64(base)
//   h_{i+1} = mix64(h_i ^ (key_i + 0x9E3779B97F4A7C15))
//
// where mix64 is the SplitMix64 finalizer
//
//   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27; z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Doubles, bounded integers and normals are derived from raw engine
// words by the fixed rules below rather than by <random> distributions, whose
// algorithms are implementation-defined.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hibd {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t k : keys) h = mix64(h ^ (k + 0x9E3779B97F4A7C15ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // (0, 1], 53 random bits.
  double uniform_open0() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
  // [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Box-Muller on (uniform_open0, uniform); the sine branch is cached and
  // returned by the following call.
  double normal();

  // Uniform integer in [0, bound) by rejection on the top bits.
  std::uint64_t below(std::uint64_t bound);

  double rademacher() { return (next() >> 63) ? 1.0 : -1.0; }

  // k distinct values from [0, n) by partial Fisher-Yates, returned sorted.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hibd
