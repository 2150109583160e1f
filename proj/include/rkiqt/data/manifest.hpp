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

namespace rkiqt::data {

struct ImageRecord {
  std::string id;
  std::string path;
  double mos = 0.0;
};

struct DatasetManifest {
  std::vector<ImageRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  double mos_min() const;
  double mos_max() const;
};

// High-quality images used as non-aligned references; no labels needed.
struct ReferencePool {
  std::vector<std::string> paths;
  bool empty() const { return paths.empty(); }
};

struct SplitSpec {
  double train_fraction = 0.8;
  int repeat_index = 0;
  std::uint64_t seed = 0;
};

// CSV with header `id,path,mos`, UTF-8, LF, `.` decimal separator.
DatasetManifest load_manifest(const std::string& path);
void write_manifest(const DatasetManifest& m, const std::string& path);
std::string manifest_to_csv(const DatasetManifest& m);

ReferencePool load_reference_pool(const std::string& path);  // CSV `id,path`
void write_reference_pool(const ReferencePool& pool, const std::string& path);

struct SplitResult {
  DatasetManifest train;
  DatasetManifest test;
};

// Disjoint partition, |train| = round(fraction * n), deterministic in
// (seed, repeat_index); both halves keep the manifest's original order.
SplitResult split(const DatasetManifest& m, const SplitSpec& spec);

}  // namespace rkiqt::data
