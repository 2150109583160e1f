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

#include "rkiqt/core/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rkiqt {

namespace {

constexpr const char* kMagic = "RKIQTCKPT 1";

std::uint32_t crc_table_entry(std::uint32_t i) {
  std::uint32_t c = i;
  for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
  return c;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len) {
  static std::uint32_t table[256];
  static bool init = [] {
    for (std::uint32_t i = 0; i < 256; ++i) table[i] = crc_table_entry(i);
    return true;
  }();
  (void)init;
  std::uint32_t c = 0xffffffffu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

void Checkpoint::put(const std::string& name, const std::string& tag,
                     const Tensor& t) {
  put_raw(name, tag, t.shape(), t.data());
}

void Checkpoint::put_raw(const std::string& name, const std::string& tag,
                         Shape shape, std::vector<Scalar> data) {
  check(idx_t(data.size()) == shape_numel(shape), Err::ShapeMismatch,
        "checkpoint array size mismatch for " + name);
  arrays[name] = ArrayEntry{tag, std::move(shape), std::move(data)};
}

Tensor Checkpoint::get(const std::string& name) const {
  auto it = arrays.find(name);
  check(it != arrays.end(), Err::BadCheckpoint,
        "checkpoint is missing array " + name);
  return Tensor::from(it->second.shape, it->second.data);
}

void Checkpoint::keep_tags(const std::set<std::string>& tags) {
  for (auto it = arrays.begin(); it != arrays.end();) {
    if (tags.count(it->second.tag) == 0)
      it = arrays.erase(it);
    else
      ++it;
  }
}

std::set<std::string> Checkpoint::tags() const {
  std::set<std::string> out;
  for (const auto& [name, e] : arrays) out.insert(e.tag);
  return out;
}

void Checkpoint::save(const std::string& path) const {
  std::ostringstream head;
  head << kMagic << '\n';
  head << "config_begin\n" << config_text;
  if (!config_text.empty() && config_text.back() != '\n') head << '\n';
  head << "config_end\n";
  head << "rng " << (rng_state_hex.empty() ? std::string(64, '0') : rng_state_hex)
       << '\n';
  head << "arrays " << arrays.size() << '\n';

  std::uint64_t offset = 0;
  for (const auto& [name, e] : arrays) {
    const std::uint64_t nbytes = e.data.size() * sizeof(Scalar);
    const std::uint32_t crc = crc32(e.data.data(), std::size_t(nbytes));
    head << name << ' ' << e.tag << " f64 ";
    for (std::size_t i = 0; i < e.shape.size(); ++i) {
      if (i) head << 'x';
      head << e.shape[i];
    }
    if (e.shape.empty()) head << 1;
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %llu %llu %08x\n",
                  (unsigned long long)offset, (unsigned long long)nbytes, crc);
    head << buf;
    offset += nbytes;
  }
  head << "data " << offset << '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), Err::UnwritableDir, "cannot open for writing: " + path);
  const std::string h = head.str();
  out.write(h.data(), std::streamsize(h.size()));
  for (const auto& [name, e] : arrays)
    out.write(reinterpret_cast<const char*>(e.data.data()),
              std::streamsize(e.data.size() * sizeof(Scalar)));
  out.flush();
  check(out.good(), Err::UnwritableDir, "write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Err::MissingCheckpoint, "cannot open checkpoint: " + path);

  Checkpoint ck;
  std::string line;
  auto next_line = [&]() {
    check(bool(std::getline(in, line)), Err::BadCheckpoint,
          "truncated checkpoint: " + path);
  };
  next_line();
  check(line == kMagic, Err::BadCheckpoint, "bad checkpoint magic in " + path);
  next_line();
  check(line == "config_begin", Err::BadCheckpoint, "missing config block");
  std::ostringstream cfg;
  for (;;) {
    next_line();
    if (line == "config_end") break;
    cfg << line << '\n';
  }
  ck.config_text = cfg.str();
  next_line();
  check(line.rfind("rng ", 0) == 0, Err::BadCheckpoint, "missing rng state");
  ck.rng_state_hex = line.substr(4);
  next_line();
  check(line.rfind("arrays ", 0) == 0, Err::BadCheckpoint, "missing arrays count");
  const std::size_t count = std::stoull(line.substr(7));

  struct Rec {
    std::string name, tag;
    Shape shape;
    std::uint64_t offset, nbytes;
    std::uint32_t crc;
  };
  std::vector<Rec> recs;
  recs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    next_line();
    std::istringstream ls(line);
    Rec r;
    std::string dtype, shape_s, crc_s;
    ls >> r.name >> r.tag >> dtype >> shape_s >> r.offset >> r.nbytes >> crc_s;
    check(!ls.fail(), Err::BadCheckpoint, "malformed array record: " + line);
    check(dtype == "f64", Err::BadCheckpoint, "unsupported dtype " + dtype);
    std::istringstream ss(shape_s);
    std::string dim;
    while (std::getline(ss, dim, 'x')) r.shape.push_back(std::stoll(dim));
    r.crc = std::uint32_t(std::stoul(crc_s, nullptr, 16));
    recs.push_back(std::move(r));
  }
  next_line();
  check(line.rfind("data ", 0) == 0, Err::BadCheckpoint, "missing data section");
  const std::uint64_t total = std::stoull(line.substr(5));

  const std::streampos data_start = in.tellg();
  for (const auto& r : recs) {
    check(shape_numel(r.shape) * idx_t(sizeof(Scalar)) == idx_t(r.nbytes),
          Err::BadCheckpoint, "array byte count mismatch for " + r.name);
    check(r.offset + r.nbytes <= total, Err::BadCheckpoint,
          "array extends past data section: " + r.name);
    std::vector<Scalar> data(std::size_t(r.nbytes / sizeof(Scalar)));
    in.seekg(data_start + std::streampos(r.offset));
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(r.nbytes));
    check(in.good(), Err::BadCheckpoint, "truncated array data: " + r.name);
    check(crc32(data.data(), std::size_t(r.nbytes)) == r.crc, Err::BadCheckpoint,
          "checksum mismatch for array " + r.name);
    ck.arrays[r.name] = ArrayEntry{r.tag, r.shape, std::move(data)};
  }
  return ck;
}

std::string Checkpoint::config_value(const std::string& key) const {
  std::istringstream in(config_text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    while (!k.empty() && (k.back() == ' ' || k.back() == '\t')) k.pop_back();
    if (k != key) continue;
    std::string v = line.substr(eq + 1);
    std::size_t s = v.find_first_not_of(" \t");
    return s == std::string::npos ? std::string() : v.substr(s);
  }
  return {};
}

}  // namespace rkiqt
