// Copyright 2026 The rqsid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string_view>

namespace rqsid {

// Deterministic, splittable random source.
//
// The stream is xoshiro256** seeded through splitmix64. All derived values
// (uniform reals, Gaussians, bounded integers) are computed here rather than
// through <random> distributions, whose output is implementation-defined, so a
// given seed produces the same stream with any standard library.
//
// split(k) derives an independent child source from (seed, k) without
// consuming the parent stream; parallel consumers each take their own child.
class RandomSource {
 public:
  static constexpr std::string_view kAlgorithmId = "xoshiro256ss/splitmix64/v1";

  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  static constexpr std::string_view algorithm_id() { return kAlgorithmId; }

  RandomSource split(std::uint64_t stream) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace rqsid
