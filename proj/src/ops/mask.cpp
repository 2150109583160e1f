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

#include "rkiqt/ops/mask.hpp"

#include <cmath>

#include "rkiqt/core/error.hpp"
#include "rkiqt/core/rng.hpp"

namespace rkiqt::ops {

MaskPolicy mask_policy_from_string(const std::string& name) {
  if (name == "random") return MaskPolicy::kRandom;
  if (name == "gaussian_center") return MaskPolicy::kGaussianCenter;
  if (name == "gaussian_edge") return MaskPolicy::kGaussianEdge;
  if (name == "all_center") return MaskPolicy::kAllCenter;
  if (name == "all_edge") return MaskPolicy::kAllEdge;
  fail(Err::TypeMismatch, "unknown mask policy: " + name);
}

const char* mask_policy_name(MaskPolicy policy) {
  switch (policy) {
    case MaskPolicy::kRandom: return "random";
    case MaskPolicy::kGaussianCenter: return "gaussian_center";
    case MaskPolicy::kGaussianEdge: return "gaussian_edge";
    case MaskPolicy::kAllCenter: return "all_center";
    case MaskPolicy::kAllEdge: return "all_edge";
  }
  return "random";
}

std::vector<MaskPolicy> all_mask_policies() {
  return {MaskPolicy::kRandom, MaskPolicy::kGaussianCenter,
          MaskPolicy::kGaussianEdge, MaskPolicy::kAllCenter,
          MaskPolicy::kAllEdge};
}

namespace {

int grid_side(std::int64_t tokens) {
  const int g = int(std::lround(std::sqrt(double(tokens))));
  check(std::int64_t(g) * g == tokens, Err::ShapeMismatch,
        "mask policy needs a square token grid, got " +
            std::to_string(tokens) + " tokens");
  return g;
}

// true inside the central g/2 x g/2 block
bool in_center_block(int y, int x, int g) {
  const int side = std::max(1, g / 2);
  const int lo = (g - side) / 2;
  return y >= lo && y < lo + side && x >= lo && x < lo + side;
}

std::vector<double> gaussian_weights(int g, bool center) {
  std::vector<double> w(std::size_t(g) * g);
  const double c = (g - 1) / 2.0;
  const double sigma = g / 2.0;
  for (int y = 0; y < g; ++y)
    for (int x = 0; x < g; ++x) {
      const double d2 = (y - c) * (y - c) + (x - c) * (x - c);
      const double bump = std::exp(-d2 / (2.0 * sigma * sigma));
      w[std::size_t(y) * g + x] = center ? bump : 1.0 - bump + 1e-6;
    }
  return w;
}

}  // namespace

std::vector<double> mask_probabilities(std::int64_t tokens,
                                       const MaskSpec& spec) {
  check(spec.ratio >= 0.0 && spec.ratio <= 1.0, Err::InvalidArgument,
        "mask ratio must be in [0,1]");
  std::vector<double> p(std::size_t(tokens), 0.0);
  switch (spec.policy) {
    case MaskPolicy::kRandom:
      for (auto& v : p) v = spec.ratio;
      break;
    case MaskPolicy::kGaussianCenter:
    case MaskPolicy::kGaussianEdge: {
      const int g = grid_side(tokens);
      const auto w =
          gaussian_weights(g, spec.policy == MaskPolicy::kGaussianCenter);
      double mean = 0;
      for (double v : w) mean += v;
      mean /= double(w.size());
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = spec.ratio >= 1.0
                   ? 1.0
                   : std::min(1.0, spec.ratio * w[i] / mean);
      break;
    }
    case MaskPolicy::kAllCenter:
    case MaskPolicy::kAllEdge: {
      const int g = grid_side(tokens);
      const bool center = spec.policy == MaskPolicy::kAllCenter;
      for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) {
          const bool inside = in_center_block(y, x, g);
          const bool always = center ? inside : !inside;
          p[std::size_t(y) * g + x] = always ? 1.0 : spec.ratio / 2.0;
        }
      break;
    }
  }
  return p;
}

std::vector<std::uint8_t> make_mask(std::int64_t tokens, const MaskSpec& spec) {
  const auto p = mask_probabilities(tokens, spec);
  Rng rng(derive_seed(spec.seed, "mask"));
  std::vector<std::uint8_t> mask(std::size_t(tokens), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = p[i] >= 1.0 ? 1 : (rng.uniform() < p[i] ? 1 : 0);
  return mask;
}

}  // namespace rkiqt::ops
