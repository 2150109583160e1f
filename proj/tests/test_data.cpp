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

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rkiqt/core/error.hpp"
#include "rkiqt/data/crops.hpp"
#include "rkiqt/data/manifest.hpp"
#include "rkiqt/data/synth.hpp"
#include "rkiqt/image/image.hpp"

using namespace rkiqt;
using namespace rkiqt::data;

namespace {

std::string temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("rkiqt_data_test_" + std::to_string(++counter));
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
  const std::string path = dir + "/" + name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace

TEST_CASE("load_manifest parses valid rows in order") {
  const std::string dir = temp_dir();
  const auto path = write_file(dir, "m.csv",
                               "id,path,mos\n"
                               "a,/x/a.ppm,12.5\n"
                               "b,/x/b.ppm,90\n"
                               "c,/x/c.ppm,-3.25\n");
  const auto m = load_manifest(path);
  REQUIRE(m.size() == 3);
  CHECK(m.records[0].id == "a");
  CHECK(m.records[1].mos == doctest::Approx(90));
  CHECK(m.records[2].mos == doctest::Approx(-3.25));
}

TEST_CASE("load_manifest distinct error codes") {
  const std::string dir = temp_dir();
  auto code_of = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Err::Internal;
  };

  CHECK(code_of([&] { load_manifest(dir + "/absent.csv"); }) ==
        Err::MissingFile);
  const auto bad_row = write_file(dir, "b1.csv", "id,path,mos\nx,/p\n");
  CHECK(code_of([&] { load_manifest(bad_row); }) == Err::MalformedRow);
  const auto nan_row = write_file(dir, "b2.csv", "id,path,mos\nx,/p,nan\n");
  CHECK(code_of([&] { load_manifest(nan_row); }) == Err::NonFiniteScore);
  const auto dup = write_file(dir, "b3.csv", "id,path,mos\nx,/p,1\nx,/q,2\n");
  CHECK(code_of([&] { load_manifest(dup); }) == Err::DuplicateId);
}

TEST_CASE("manifest write(load(f)) is byte-identical to canonical form") {
  const std::string dir = temp_dir();
  // 0.10 canonicalizes to 0.1; 5 stays 5
  const auto path = write_file(dir, "m.csv",
                               "id,path,mos\n"
                               "a,/x/a.ppm,0.10\n"
                               "b,/x/b.ppm,5\n");
  const auto m = load_manifest(path);
  const std::string once = manifest_to_csv(m);

  // canonicalization oracle: parse-and-format independently
  auto canonical = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    std::getline(in, line);
    out = line + "\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c1 = line.find(','), c2 = line.rfind(',');
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof(buf),
                             std::stod(line.substr(c2 + 1)));
      out += line.substr(0, c2 + 1) + std::string(buf, r.ptr) + "\n";
    }
    return out;
  };
  std::ifstream raw(path, std::ios::binary);
  std::string original((std::istreambuf_iterator<char>(raw)),
                       std::istreambuf_iterator<char>());
  CHECK(once == canonical(original));

  // idempotent: write -> load -> write round-trips bytes
  write_manifest(m, dir + "/m2.csv");
  const auto m2 = load_manifest(dir + "/m2.csv");
  CHECK(manifest_to_csv(m2) == once);
}

TEST_CASE("split: sizes, disjoint coverage, determinism") {
  DatasetManifest m;
  for (int i = 0; i < 10; ++i)
    m.records.push_back({"r" + std::to_string(i), "/p", double(i)});

  SplitSpec spec{0.8, 0, 7};
  const auto s1 = split(m, spec);
  CHECK(s1.train.size() == 8);
  CHECK(s1.test.size() == 2);

  std::set<std::string> train_ids, test_ids, all;
  for (const auto& r : s1.train.records) train_ids.insert(r.id);
  for (const auto& r : s1.test.records) test_ids.insert(r.id);
  for (const auto& r : m.records) all.insert(r.id);
  std::set<std::string> uni = train_ids;
  uni.insert(test_ids.begin(), test_ids.end());
  CHECK(uni == all);
  for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);

  const auto s2 = split(m, spec);
  CHECK(manifest_to_csv(s1.train) == manifest_to_csv(s2.train));
  CHECK(manifest_to_csv(s1.test) == manifest_to_csv(s2.test));

  // different repeats differ (with overwhelming probability at n=10)
  const auto s3 = split(m, SplitSpec{0.8, 1, 7});
  CHECK(manifest_to_csv(s1.train) != manifest_to_csv(s3.train));

  const auto sfull = split(m, SplitSpec{1.0, 0, 7});
  CHECK(sfull.test.empty());
  CHECK(sfull.train.size() == 10);

  DatasetManifest empty;
  CHECK_THROWS_AS((void)split(empty, spec), Error);
}

TEST_CASE("crop_patches: bounds, determinism, full-image degenerate case") {
  Rng base_rng(3);
  const Image8 img = make_base_image(96, base_rng);

  Rng r1(42), r2(42);
  const auto b1 = crop_patches(img, "x", 55.0, 10, 64, r1);
  const auto b2 = crop_patches(img, "x", 55.0, 10, 64, r2);
  REQUIRE(b1.size() == 10);
  CHECK(b1.pixels.shape() == Shape{10, 3, 64, 64});
  for (const auto& s : b1.sources) {
    CHECK(s.crop_y >= 0);
    CHECK(s.crop_y <= 96 - 64);
    CHECK(s.crop_x >= 0);
    CHECK(s.crop_x <= 96 - 64);
  }
  CHECK(b1.pixels.data() == b2.pixels.data());
  for (double mos : b1.mos) CHECK(mos == doctest::Approx(55.0));

  // crop == image size: single valid offset, identical patches
  Rng r3(1);
  const auto full = crop_patches(img, "x", 1.0, 10, 96, r3);
  REQUIRE(full.size() == 10);
  for (const auto& s : full.sources) {
    CHECK(s.crop_y == 0);
    CHECK(s.crop_x == 0);
  }
  const auto& px = full.pixels.data();
  const std::size_t stride = std::size_t(3) * 96 * 96;
  for (int i = 1; i < 10; ++i)
    CHECK(std::equal(px.begin(), px.begin() + stride,
                     px.begin() + i * stride));

  // too-small image
  Image8 tiny = Image8::filled(32, 32, 1, 2, 3);
  Rng r4(1);
  CHECK_THROWS_AS((void)crop_patches(tiny, "t", 0.0, 1, 64, r4), Error);
}

TEST_CASE("synthesize_toy_dataset: counts, identity level, monotone mos") {
  const std::string dir = temp_dir();
  SynthConfig cfg;
  cfg.bases = 4;
  cfg.levels = 5;
  cfg.families = {"blur"};
  cfg.base_size = 72;
  cfg.seed = 13;
  const auto result = synthesize_toy_dataset(cfg, dir);
  CHECK(result.manifest.size() == 4 * 5);
  CHECK(result.refs.paths.size() == 4);

  std::set<double> mos_values;
  for (const auto& r : result.manifest.records) mos_values.insert(r.mos);
  CHECK(mos_values.size() == 5);
  CHECK(*mos_values.begin() == doctest::Approx(0.0));
  CHECK(*mos_values.rbegin() == doctest::Approx(100.0));

  // level-0 records point at the pristine file
  for (const auto& r : result.manifest.records) {
    if (r.id.ends_with("_l0")) {
      const Image8 img = load_image(r.path);
      CHECK(img.width == 72);
      CHECK(r.mos == doctest::Approx(100.0));
    }
  }

  // loading the manifest from disk matches
  const auto loaded = load_manifest(result.manifest_path);
  CHECK(manifest_to_csv(loaded) == manifest_to_csv(result.manifest));
}

TEST_CASE("toy dataset: mos strictly decreasing in level within each base") {
  const std::string dir = temp_dir();
  SynthConfig cfg;
  cfg.bases = 2;
  cfg.levels = 4;
  cfg.base_size = 64;
  const auto result = synthesize_toy_dataset(cfg, dir);
  for (int b = 0; b < cfg.bases; ++b)
    for (const auto& fam : cfg.families)
      for (int l = 1; l < cfg.levels; ++l) {
        auto find = [&](int level) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "b%03d_%s_l%d", b, fam.c_str(),
                        level);
          for (const auto& r : result.manifest.records)
            if (r.id == buf) return r.mos;
          FAIL("record not found: ", buf);
          return 0.0;
        };
        CHECK(find(l) < find(l - 1));
      }
}
