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

#include "vimpc/random.h"

#include <sstream>

#include "vimpc/core_types.h"

namespace vimpc {

std::string Rng::Serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << uniform_ << ' ' << normal_;
  return out.str();
}

Rng Rng::Deserialize(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng.engine_ >> rng.uniform_ >> rng.normal_;
  if (!in) {
    throw Error(ErrorCode::kParseError, "rng_state",
                "malformed generator state");
  }
  return rng;
}

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
    : key_(Mix64(Mix64(Mix64(seed) ^ a) ^ b)) {}

StreamRng::result_type StreamRng::operator()() {
  return Mix64(key_ ^ (0xd1b54a32d192ed03ULL * ++counter_));
}

}  // namespace vimpc
