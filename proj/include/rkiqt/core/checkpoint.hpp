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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rkiqt/core/tensor.hpp"

namespace rkiqt {

std::uint32_t crc32(const void* data, std::size_t len);

// Single-file container: a text manifest (name, tag, dtype, shape, offset,
// byte count, checksum per array) followed by raw little-endian float64
// blobs. Arrays are stored in name order, so save -> load -> save is
// byte-identical.
//
// Tags partition parameters by component (student, align, generate,
// inter_conv, inter_inv, teacher_*); stripping every non-student tag leaves
// a checkpoint that the inference path consumes unchanged.
class Checkpoint {
 public:
  struct ArrayEntry {
    std::string tag;
    Shape shape;
    std::vector<Scalar> data;
  };

  std::string config_text;  // resolved run configuration, key = value lines
  std::string rng_state_hex;
  std::map<std::string, ArrayEntry> arrays;

  void put(const std::string& name, const std::string& tag, const Tensor& t);
  void put_raw(const std::string& name, const std::string& tag, Shape shape,
               std::vector<Scalar> data);
  bool has(const std::string& name) const { return arrays.count(name) > 0; }
  Tensor get(const std::string& name) const;  // fresh constant leaf

  // keeps only arrays whose tag is in `tags`
  void keep_tags(const std::set<std::string>& tags);

  std::set<std::string> tags() const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  // config values parsed back out of config_text (empty if missing)
  std::string config_value(const std::string& key) const;
};

}  // namespace rkiqt
