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

#include "rkiqt/core/rng.hpp"

#include <cstdio>

#include "rkiqt/core/error.hpp"

namespace rkiqt {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void Rng::reseed(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
  cached_ = false;
  cache_ = 0.0;
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) return 0;
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::int64_t>(x % un);
}

double Rng::normal() {
  if (cached_) {
    cached_ = false;
    return cache_;
  }
  // u1 in (0,1] so log is finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  cache_ = r * std::sin(theta);
  cached_ = true;
  return r * std::cos(theta);
}

double Rng::truncated_normal(double stddev, double lo, double hi) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double x = stddev * normal();
    if (x >= lo && x <= hi) return x;
  }
  return 0.5 * (lo + hi);  // unreachable for sane bounds
}

std::string Rng::state_hex() const {
  char buf[4 * 16 + 1];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx%016llx%016llx",
                (unsigned long long)s_[0], (unsigned long long)s_[1],
                (unsigned long long)s_[2], (unsigned long long)s_[3]);
  return std::string(buf);
}

void Rng::set_state_hex(std::string_view hex) {
  check(hex.size() == 64, Err::BadCheckpoint, "rng state must be 64 hex chars");
  auto parse16 = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      const char c = hex[off + i];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= std::uint64_t(c - '0');
      else if (c >= 'a' && c <= 'f') v |= std::uint64_t(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= std::uint64_t(c - 'A' + 10);
      else fail(Err::BadCheckpoint, "bad hex digit in rng state");
    }
    return v;
  };
  for (int w = 0; w < 4; ++w) s_[w] = parse16(std::size_t(w) * 16);
  cached_ = false;
}

}  // namespace rkiqt
