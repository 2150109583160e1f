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

#include <cstdint>
#include <string>
#include <vector>

namespace rkiqt::ops {

// Token-mask spatial profiles over the g x g patch grid.
//   random:          i.i.d. Bernoulli(ratio)
//   gaussian_center: per-token probability follows a Gaussian bump at the
//                    grid center, scaled so the mean probability is `ratio`
//   gaussian_edge:   the complementary profile
//   all_center:      central g/2 x g/2 block always masked, rest
//                    Bernoulli(ratio/2)
//   all_edge:        everything outside the central block masked, the block
//                    Bernoulli(ratio/2)
enum class MaskPolicy {
  kRandom,
  kGaussianCenter,
  kGaussianEdge,
  kAllCenter,
  kAllEdge,
};

MaskPolicy mask_policy_from_string(const std::string& name);
const char* mask_policy_name(MaskPolicy policy);
std::vector<MaskPolicy> all_mask_policies();

struct MaskSpec {
  MaskPolicy policy = MaskPolicy::kRandom;
  double ratio = 0.5;
  std::uint64_t seed = 0;
};

// Per-token masking probabilities before sampling (1 = always masked).
std::vector<double> mask_probabilities(std::int64_t tokens,
                                       const MaskSpec& spec);

// Deterministic in (tokens, spec). 1 = masked.
std::vector<std::uint8_t> make_mask(std::int64_t tokens, const MaskSpec& spec);

}  // namespace rkiqt::ops
