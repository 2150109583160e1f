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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rkiqt/core/checkpoint.hpp"
#include "rkiqt/core/rng.hpp"

using namespace rkiqt;

namespace {
std::string temp_path(const std::string& name) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("rkiqt_ckpt_" + std::to_string(++counter));
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("checkpoint round trip is bit exact and canonical") {
  Rng rng(1);
  Checkpoint ck;
  ck.config_text = "dim = 64\nseed = 7\n";
  ck.rng_state_hex = Rng(7).state_hex();
  for (int i = 0; i < 5; ++i) {
    std::vector<Scalar> data(std::size_t(3 + i * 7));
    for (auto& v : data) v = rng.normal();
    ck.put_raw("array" + std::to_string(i), i % 2 ? "student" : "teacher_nar",
               {idx_t(data.size())}, data);
  }

  const auto p1 = temp_path("a.ckpt");
  ck.save(p1);
  Checkpoint back = Checkpoint::load(p1);
  CHECK(back.config_text == ck.config_text);
  CHECK(back.rng_state_hex == ck.rng_state_hex);
  REQUIRE(back.arrays.size() == ck.arrays.size());
  for (const auto& [name, e] : ck.arrays) {
    REQUIRE(back.has(name));
    CHECK(back.arrays.at(name).data == e.data);  // bitwise
    CHECK(back.arrays.at(name).tag == e.tag);
  }

  // save(load(f)) is byte-identical
  const auto p2 = temp_path("b.ckpt");
  back.save(p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("checkpoint error paths") {
  CHECK_THROWS_AS((void)Checkpoint::load("/nonexistent/x.ckpt"), Error);
  try {
    (void)Checkpoint::load("/nonexistent/x.ckpt");
  } catch (const Error& e) {
    CHECK(e.code() == Err::MissingCheckpoint);
  }

  // corrupt one payload byte: checksum must catch it
  Checkpoint ck;
  ck.put_raw("w", "student", {4}, {1.0, 2.0, 3.0, 4.0});
  const auto path = temp_path("c.ckpt");
  ck.save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    char b = 0x5a;
    f.write(&b, 1);
  }
  try {
    (void)Checkpoint::load(path);
    FAIL("corrupt checkpoint accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::BadCheckpoint);
  }
}

TEST_CASE("keep_tags strips to the requested component set") {
  Checkpoint ck;
  ck.put_raw("student.a", "student", {1}, {1.0});
  ck.put_raw("align.w", "align", {1}, {2.0});
  ck.put_raw("teacher_nar.x", "teacher_nar", {1}, {3.0});
  ck.put_raw("inter_conv.y", "inter_conv", {1}, {4.0});
  ck.keep_tags({"student"});
  CHECK(ck.arrays.size() == 1);
  CHECK(ck.has("student.a"));
}

TEST_CASE("config_value reads keys back out") {
  Checkpoint ck;
  ck.config_text = "alpha = 1\nbeta = two words\n";
  CHECK(ck.config_value("alpha") == "1");
  CHECK(ck.config_value("beta") == "two words");
  CHECK(ck.config_value("gamma").empty());
}
