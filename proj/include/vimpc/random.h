// Copyright 2026 The vimpc Authors
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

#ifndef VIMPC_RANDOM_H_
#define VIMPC_RANDOM_H_

#include <cstdint>
#include <random>
#include <string>

namespace vimpc {

// Seedable generator threaded explicitly through every stochastic
// operation. There is no global random state anywhere in the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double Uniform() { return uniform_(engine_); }
  double Normal() { return normal_(engine_); }
  // Uniform integer in [0, n).
  int UniformInt(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }
  // Raw 64-bit draw, used to derive seeds for substreams.
  std::uint64_t NextSeed() { return engine_(); }

  // Full generator state, including cached normal variates.
  std::string Serialize() const;
  static Rng Deserialize(const std::string& state);

 private:
  Rng() = default;

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Counter-based stream keyed by (seed, a, b): the n-th draw is a pure
// function of the key and n, so per-rollout streams do not depend on which
// worker runs them or in what order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  double Uniform() { return uniform_(*this); }
  double Normal() { return normal_(*this); }
  int UniformInt(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(*this);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

}  // namespace vimpc

#endif  // VIMPC_RANDOM_H_
