// Copyright (c) the RKIQT Authors.
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

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace rkiqt {

// xoshiro256** with our own distributions. The standard library engines are
// portable but its distributions are not, and bit-level reproducibility
// across toolchains is part of the checkpoint/determinism contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), unbiased
  std::int64_t uniform_int(std::int64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  double normal();  // standard normal, Box-Muller with caching
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // rejection-sampled N(0, stddev) restricted to [lo, hi]
  double truncated_normal(double stddev, double lo, double hi);

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) {
    s_ = s;
    cached_ = false;
  }
  std::string state_hex() const;
  void set_state_hex(std::string_view hex);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  bool cached_ = false;
  double cache_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view s);

// All subsystem randomness flows from one root seed; streams are separated
// by hashing the subsystem name into the seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view subsystem) {
  std::uint64_t s = root ^ fnv1a64(subsystem);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view subsystem,
                                 std::uint64_t index) {
  std::uint64_t s = root ^ fnv1a64(subsystem) ^ (0x9e3779b97f4a7c15ull * (index + 1));
  return splitmix64(s);
}

}  // namespace rkiqt
