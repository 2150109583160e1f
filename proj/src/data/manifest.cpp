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

#include "rkiqt/data/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "rkiqt/core/error.hpp"
#include "rkiqt/core/rng.hpp"

namespace rkiqt::data {

double DatasetManifest::mos_min() const {
  check(!records.empty(), Err::EmptyManifest, "mos_min on empty manifest");
  double v = records[0].mos;
  for (const auto& r : records) v = std::min(v, r.mos);
  return v;
}

double DatasetManifest::mos_max() const {
  check(!records.empty(), Err::EmptyManifest, "mos_max on empty manifest");
  double v = records[0].mos;
  for (const auto& r : records) v = std::max(v, r.mos);
  return v;
}

namespace {

// shortest decimal form that round-trips; canonical across writers
std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), Err::MissingFile, "cannot open manifest: " + path);

  DatasetManifest m;
  std::string line;
  check(bool(std::getline(in, line)), Err::MalformedRow,
        "empty manifest file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  check(line == "id,path,mos", Err::MalformedRow,
        "manifest header must be `id,path,mos`, got: " + line);

  std::unordered_set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split_csv_row(line);
    check(cols.size() == 3, Err::MalformedRow,
          "manifest row " + std::to_string(lineno) + " has " +
              std::to_string(cols.size()) + " columns");
    check(!cols[0].empty() && !cols[1].empty(), Err::MalformedRow,
          "manifest row " + std::to_string(lineno) + ": empty id or path");
    double mos = 0;
    const auto* first = cols[2].data();
    const auto* last = cols[2].data() + cols[2].size();
    const auto res = std::from_chars(first, last, mos);
    check(res.ec == std::errc() && res.ptr == last, Err::MalformedRow,
          "manifest row " + std::to_string(lineno) + ": bad mos `" + cols[2] +
              "`");
    check(std::isfinite(mos), Err::NonFiniteScore,
          "manifest row " + std::to_string(lineno) + ": non-finite mos");
    check(seen.insert(cols[0]).second, Err::DuplicateId,
          "duplicate manifest id: " + cols[0]);
    m.records.push_back(ImageRecord{cols[0], cols[1], mos});
  }
  return m;
}

std::string manifest_to_csv(const DatasetManifest& m) {
  std::ostringstream out;
  out << "id,path,mos\n";
  for (const auto& r : m.records)
    out << r.id << ',' << r.path << ',' << format_double(r.mos) << '\n';
  return out.str();
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), Err::UnwritableDir, "cannot write manifest: " + path);
  const std::string csv = manifest_to_csv(m);
  out.write(csv.data(), std::streamsize(csv.size()));
  check(out.good(), Err::UnwritableDir, "short manifest write: " + path);
}

ReferencePool load_reference_pool(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), Err::MissingFile, "cannot open reference pool: " + path);
  ReferencePool pool;
  std::string line;
  check(bool(std::getline(in, line)), Err::MalformedRow,
        "empty reference pool file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  check(line == "id,path", Err::MalformedRow,
        "reference pool header must be `id,path`");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_row(line);
    check(cols.size() == 2, Err::MalformedRow, "bad reference pool row");
    pool.paths.push_back(cols[1]);
  }
  return pool;
}

void write_reference_pool(const ReferencePool& pool, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), Err::UnwritableDir, "cannot write reference pool: " + path);
  out << "id,path\n";
  for (std::size_t i = 0; i < pool.paths.size(); ++i)
    out << "ref" << i << ',' << pool.paths[i] << '\n';
}

SplitResult split(const DatasetManifest& m, const SplitSpec& spec) {
  check(!m.empty(), Err::EmptyManifest, "split on empty manifest");
  check(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0,
        Err::InvalidArgument, "train_fraction must be in (0, 1]");

  const std::size_t n = m.size();
  const std::size_t n_train =
      std::size_t(std::llround(spec.train_fraction * double(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(spec.seed, "split", std::uint64_t(spec.repeat_index)));
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1],
              order[std::size_t(rng.uniform_int(std::int64_t(i)))]);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train && i < n; ++i) in_train[order[i]] = true;

  SplitResult out;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? out.train : out.test).records.push_back(m.records[i]);
  return out;
}

}  // namespace rkiqt::data
