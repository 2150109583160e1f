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

#include "rkiqt/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rkiqt/core/rng.hpp"

namespace rkiqt::cli {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  check(res.ec == std::errc() && res.ptr == v.data() + v.size(),
        Err::TypeMismatch, "config key `" + key + "` expects a number, got `" +
                               v + "`");
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  check(res.ec == std::errc() && res.ptr == v.data() + v.size(),
        Err::TypeMismatch, "config key `" + key + "` expects an integer, got `" +
                               v + "`");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(Err::TypeMismatch,
       "config key `" + key + "` expects a boolean, got `" + v + "`");
}

struct KeyHandler {
  std::string description;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool encoder_key = false;
};

const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    auto add_int = [&](const std::string& name, int RunConfig::*field,
                       const std::string& desc, bool enc = false) {
      t[name] = KeyHandler{
          desc, [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field, name](RunConfig& c, const std::string& v) {
            c.*field = int(parse_int(name, v));
          },
          enc};
    };
    auto add_double = [&](const std::string& name, double RunConfig::*field,
                          const std::string& desc, bool enc = false) {
      t[name] = KeyHandler{
          desc, [field](const RunConfig& c) { return fmt_double(c.*field); },
          [field, name](RunConfig& c, const std::string& v) {
            c.*field = parse_double(name, v);
          },
          enc};
    };
    auto add_bool = [&](const std::string& name, bool RunConfig::*field,
                        const std::string& desc) {
      t[name] = KeyHandler{
          desc,
          [field](const RunConfig& c) { return (c.*field) ? "true" : "false"; },
          [field, name](RunConfig& c, const std::string& v) {
            c.*field = parse_bool(name, v);
          },
          false};
    };
    auto add_string = [&](const std::string& name,
                          std::string RunConfig::*field,
                          const std::string& desc) {
      t[name] = KeyHandler{desc,
                           [field](const RunConfig& c) { return c.*field; },
                           [field](RunConfig& c, const std::string& v) {
                             c.*field = v;
                           },
                           false};
    };

    t["profile"] = KeyHandler{
        "configuration profile: desk or paper",
        [](const RunConfig& c) { return c.profile; },
        [](RunConfig& c, const std::string& v) { c.apply_profile(v); }, false};
    t["seed"] = KeyHandler{
        "root seed; all subsystem seeds derive from it",
        [](const RunConfig& c) { return std::to_string(c.seed); },
        [](RunConfig& c, const std::string& v) {
          c.seed = std::uint64_t(parse_int("seed", v));
        },
        false};
    add_int("threads", &RunConfig::threads, "worker threads (0 = auto)");
    add_bool("deterministic", &RunConfig::deterministic,
             "single fixed work order; identical reruns");

    add_int("image_size", &RunConfig::image_size, "crop side length", true);
    add_int("patch_size", &RunConfig::patch_size, "encoder patch side", true);
    add_int("dim", &RunConfig::dim, "encoder token dimension", true);
    add_int("depth", &RunConfig::depth, "encoder blocks", true);
    add_int("heads", &RunConfig::heads, "attention heads", true);
    add_double("mlp_ratio", &RunConfig::mlp_ratio, "encoder MLP expansion",
               true);
    add_int("decoder_depth", &RunConfig::decoder_depth,
            "quality decoder blocks", true);
    add_int("teacher_dim", &RunConfig::teacher_dim,
            "reference-teacher token dim and inter-layer width", true);

    add_int("epochs", &RunConfig::epochs, "training epochs");
    add_double("lr", &RunConfig::lr, "initial learning rate");
    add_double("teacher_lr", &RunConfig::teacher_lr,
               "initial learning rate for teacher pretraining");
    add_int("teacher_crops", &RunConfig::teacher_crops,
            "crops per record per epoch during teacher pretraining");
    add_double("decay_factor", &RunConfig::decay_factor,
               "lr division factor at each decay");
    add_int("decay_every", &RunConfig::decay_every, "epochs between decays");
    add_int("batch_size", &RunConfig::batch_size, "records per step");
    add_double("weight_decay", &RunConfig::weight_decay,
               "decoupled weight decay");
    add_double("clip_norm", &RunConfig::clip_norm,
               "global gradient-norm clip (0 disables)");
    add_double("lambda1", &RunConfig::lambda1, "feature-distillation weight");
    add_double("lambda2", &RunConfig::lambda2, "logit-regularization weight");
    add_int("crops_train", &RunConfig::crops_train,
            "random crops per record per training step");
    add_int("crops_eval", &RunConfig::crops_eval,
            "random crops averaged per image at evaluation");
    add_int("val_crops", &RunConfig::val_crops,
            "crops per image for per-epoch validation");
    add_double("train_fraction", &RunConfig::train_fraction,
               "fraction of records in the training split");
    add_int("repeat_index", &RunConfig::repeat_index,
            "which random split repetition to use");
    add_string("mask_policy", &RunConfig::mask_policy,
               "random | gaussian_center | gaussian_edge | all_center | "
               "all_edge");
    add_double("mask_ratio", &RunConfig::mask_ratio,
               "expected masked token fraction");
    add_bool("no_nar", &RunConfig::no_nar,
             "disable reference-feature distillation");
    add_bool("no_regular", &RunConfig::no_regular,
             "disable logit regularization");
    add_bool("inter_layer", &RunConfig::inter_layer,
             "use the learnable intermediate layers for pseudo-labels");
    add_string("feature_mode", &RunConfig::feature_mode,
               "feature distillation variant: mcd | drd");
    add_bool("normalized_frobenius", &RunConfig::normalized_frobenius,
             "divide feature loss by per-image element count");
    add_bool("logistic4", &RunConfig::logistic4,
             "fit a 4-parameter logistic before computing plcc");
    add_double("norm_mean", &RunConfig::norm_mean,
               "per-channel standardization mean");
    add_double("norm_std", &RunConfig::norm_std,
               "per-channel standardization std");

    add_string("data_dir", &RunConfig::data_dir,
               "dataset directory (manifest.csv, refs.csv)");
    add_string("teachers_dir", &RunConfig::teachers_dir,
               "directory with pretrained teacher checkpoints");
    add_string("out_dir", &RunConfig::out_dir, "artifact output directory");
    return t;
  }();
  return table;
}

}  // namespace

RunConfig RunConfig::profile_defaults(const std::string& name) {
  RunConfig c;
  c.apply_profile(name);
  return c;
}

void RunConfig::apply_profile(const std::string& name) {
  if (name == "desk") {
    profile = "desk";
    image_size = 64;
    patch_size = 8;
    dim = 64;
    depth = 4;
    heads = 4;
    mlp_ratio = 2.0;
    decoder_depth = 1;
    teacher_dim = 32;
    batch_size = 16;
    crops_train = 8;
    lambda1 = 0.1;
    clip_norm = 1.0;
  } else if (name == "paper") {
    profile = "paper";
    image_size = 224;
    patch_size = 16;
    dim = 384;
    depth = 12;
    heads = 6;
    mlp_ratio = 4.0;
    decoder_depth = 1;
    teacher_dim = 384;
    batch_size = 16;
    crops_train = 10;
    clip_norm = 0.0;
  } else {
    fail(Err::TypeMismatch, "unknown profile: " + name);
  }
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), Err::MissingFile, "cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos, Err::TypeMismatch,
          "config line " + std::to_string(lineno) + " is not `key = value`");
    apply_kv(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
  const auto& table = key_table();
  const auto it = table.find(key);
  check(it != table.end(), Err::UnknownKey, "unknown config key: " + key);
  it->second.set(*this, value);
}

void RunConfig::apply_env() {
  if (const char* env = std::getenv("RKIQT_SEED"))
    seed = std::uint64_t(parse_int("seed", env));
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  for (const auto& [name, handler] : key_table())
    out << name << " = " << handler.get(*this) << '\n';
  return out.str();
}

std::string RunConfig::hash() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)fnv1a64(canonical_text()));
  return buf;
}

std::string RunConfig::encoder_hash() const {
  std::ostringstream enc;
  for (const auto& [name, handler] : key_table())
    if (handler.encoder_key) enc << name << " = " << handler.get(*this) << '\n';
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)fnv1a64(enc.str()));
  return buf;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  // two passes so `profile` never clobbers explicit keys
  std::vector<std::pair<std::string, std::string>> kvs;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    kvs.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : kvs)
    if (k == "profile") c.apply_kv(k, v);
  for (const auto& [k, v] : kvs)
    if (k != "profile") c.apply_kv(k, v);
  return c;
}

student::EncoderConfig RunConfig::encoder_config() const {
  student::EncoderConfig e;
  e.image_size = image_size;
  e.patch_size = patch_size;
  e.dim = dim;
  e.depth = depth;
  e.heads = heads;
  e.mlp_ratio = mlp_ratio;
  e.decoder_depth = decoder_depth;
  e.stem.out_dim = dim;
  return e;
}

teachers::NarTeacherConfig RunConfig::nar_config() const {
  teachers::NarTeacherConfig n;
  n.dim = teacher_dim;
  n.depth = depth;  // one tap per student layer when depths match
  n.heads = heads;
  n.mlp_ratio = 2.0;
  n.image_size = image_size;
  n.patch_size = patch_size;
  return n;
}

teachers::BiasTeacherConfig RunConfig::bias_config(
    teachers::BiasKind kind) const {
  teachers::BiasTeacherConfig b;
  b.kind = kind;
  b.widths = {16, 32, 48, 64};
  return b;
}

ops::MaskSpec RunConfig::mask_spec() const {
  ops::MaskSpec m;
  m.policy = ops::mask_policy_from_string(mask_policy);
  m.ratio = mask_ratio;
  m.seed = derive_seed(seed, "mask");
  return m;
}

distill::LossWeights RunConfig::loss_weights() const {
  return distill::LossWeights{lambda1, lambda2};
}

data::PixelNorm RunConfig::pixel_norm() const {
  data::PixelNorm n;
  for (int c = 0; c < 3; ++c) {
    n.mean[c] = norm_mean;
    n.stddev[c] = norm_std;
  }
  return n;
}

void RunConfig::validate() const {
  encoder_config().validate();
  check(epochs >= 1, Err::InvalidArgument, "epochs must be >= 1");
  check(lr > 0, Err::InvalidArgument, "lr must be positive");
  check(decay_factor > 1, Err::InvalidArgument, "decay_factor must be > 1");
  check(batch_size >= 1, Err::InvalidArgument, "batch_size must be >= 1");
  check(mask_ratio >= 0 && mask_ratio <= 1, Err::InvalidArgument,
        "mask_ratio must be in [0,1]");
  check(train_fraction > 0 && train_fraction <= 1, Err::InvalidArgument,
        "train_fraction must be in (0,1]");
  check(feature_mode == "mcd" || feature_mode == "drd", Err::TypeMismatch,
        "feature_mode must be mcd or drd");
  (void)mask_spec();  // validates the policy name
}

std::vector<ConfigKey> config_registry() {
  std::vector<ConfigKey> out;
  const RunConfig defaults;
  for (const auto& [name, handler] : key_table())
    out.push_back(ConfigKey{name, handler.description, handler.get(defaults)});
  return out;
}

}  // namespace rkiqt::cli
