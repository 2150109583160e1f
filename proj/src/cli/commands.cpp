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

#include "rkiqt/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rkiqt/core/thread_pool.hpp"
#include "rkiqt/data/synth.hpp"
#include "rkiqt/eval/diagnostics.hpp"
#include "rkiqt/train/ablation.hpp"

namespace rkiqt::cli {

namespace fs = std::filesystem;

RunConfig resolve_config(const std::string& config_file,
                         const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_file.empty()) cfg.apply_file(config_file);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    check(eq != std::string::npos, Err::InvalidArgument,
          "--set expects key=value, got `" + kv + "`");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    cfg.apply_kv(strip(kv.substr(0, eq)), strip(kv.substr(eq + 1)));
  }
  cfg.apply_env();
  if (cfg.threads > 0) set_global_threads(cfg.threads);
  return cfg;
}

train::TeacherSet LoadedTeachers::set() const {
  train::TeacherSet s;
  if (has_nar) s.nar = &nar;
  if (has_bias) {
    s.conv = &conv;
    s.inv = &inv;
  }
  return s;
}

LoadedTeachers load_teachers(const RunConfig& cfg) {
  LoadedTeachers out;
  if (!cfg.no_nar) {
    const std::string path = cfg.teachers_dir + "/nar.ckpt";
    out.nar = teachers::NarTeacher::from_checkpoint(Checkpoint::load(path),
                                                    cfg.nar_config());
    out.nar.set_frozen();
    out.has_nar = true;
  }
  if (!cfg.no_regular) {
    out.conv = teachers::BiasTeacher::from_checkpoint(
        Checkpoint::load(cfg.teachers_dir + "/conv.ckpt"),
        cfg.bias_config(teachers::BiasKind::kConv));
    out.inv = teachers::BiasTeacher::from_checkpoint(
        Checkpoint::load(cfg.teachers_dir + "/inv.ckpt"),
        cfg.bias_config(teachers::BiasKind::kInv));
    out.conv.set_frozen();
    out.inv.set_frozen();
    out.has_bias = true;
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), Err::UnwritableDir, "cannot write: " + path);
  out << content;
}

data::DatasetManifest manifest_of(const RunConfig& cfg) {
  check(!cfg.data_dir.empty(), Err::InvalidArgument, "data_dir is not set");
  return data::load_manifest(cfg.data_dir + "/manifest.csv");
}

data::ReferencePool refs_of(const RunConfig& cfg) {
  return data::load_reference_pool(cfg.data_dir + "/refs.csv");
}

std::string artifact_header(const RunConfig& cfg) {
  return "# run_config_hash: " + cfg.hash() + "\n# encoder_hash: " +
         cfg.encoder_hash() + "\n";
}

}  // namespace

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, int bases,
              int levels, const std::string& families, int base_size) {
  data::SynthConfig sc;
  sc.bases = bases;
  sc.levels = levels;
  sc.base_size = base_size;
  sc.seed = cfg.seed;
  if (!families.empty()) {
    sc.families.clear();
    std::istringstream in(families);
    std::string f;
    while (std::getline(in, f, ','))
      if (!f.empty()) sc.families.push_back(f);
  }
  const auto result = data::synthesize_toy_dataset(sc, out_dir);
  std::printf("wrote %zu records (%d bases x %d levels x %zu families) to %s\n",
              result.manifest.size(), sc.bases, sc.levels, sc.families.size(),
              out_dir.c_str());
  std::printf("manifest: %s\nrefs: %s\n", result.manifest_path.c_str(),
              result.refs_path.c_str());
  return 0;
}

eval::MetricPair evaluate_bias_teacher(const teachers::BiasTeacher& teacher,
                                       const data::DatasetManifest& manifest,
                                       const RunConfig& cfg, double mos_min,
                                       double mos_max) {
  NoGradGuard guard;
  eval::ImageCache cache;
  const auto norm = cfg.pixel_norm();
  std::vector<double> pred, gt;
  for (const auto& rec : manifest.records) {
    Rng rng(derive_seed(cfg.seed, "teval", fnv1a64(rec.id)));
    auto batch = data::crop_patches(cache.get(rec.path), rec.id, rec.mos,
                                    cfg.crops_eval, cfg.image_size, rng);
    const auto out =
        teacher.forward(data::normalize_pixels(batch.pixels, norm));
    double mean = 0;
    for (double v : out.y_prime.data()) mean += v;
    mean /= double(out.y_prime.numel());
    pred.push_back(mean * (mos_max - mos_min) + mos_min);
    gt.push_back(rec.mos);
  }
  return eval::metrics(pred, gt);
}

eval::MetricPair evaluate_nar_teacher(const teachers::NarTeacher& teacher,
                                      const data::DatasetManifest& manifest,
                                      const data::ReferencePool& refs,
                                      const RunConfig& cfg, double mos_min,
                                      double mos_max) {
  check(!refs.empty(), Err::EmptyPool, "nar evaluation needs references");
  NoGradGuard guard;
  eval::ImageCache cache;
  const auto norm = cfg.pixel_norm();
  std::vector<double> pred, gt;
  for (const auto& rec : manifest.records) {
    Rng rng(derive_seed(cfg.seed, "teval_nar", fnv1a64(rec.id)));
    auto batch = data::crop_patches(cache.get(rec.path), rec.id, rec.mos,
                                    cfg.crops_eval, cfg.image_size, rng);
    const auto& ref_path = refs.paths[std::size_t(
        rng.uniform_int(std::int64_t(refs.paths.size())))];
    auto ref_batch = data::crop_patches(cache.get(ref_path), "ref", 0.0,
                                        cfg.crops_eval, cfg.image_size, rng);
    const auto out =
        teacher.forward(data::normalize_pixels(batch.pixels, norm),
                        data::normalize_pixels(ref_batch.pixels, norm));
    double mean = 0;
    for (double v : out.y.data()) mean += v;
    mean /= double(out.y.numel());
    pred.push_back(mean * (mos_max - mos_min) + mos_min);
    gt.push_back(rec.mos);
  }
  return eval::metrics(pred, gt);
}

int cmd_pretrain_teacher(const RunConfig& cfg, const std::string& kind,
                         const std::string& out_path) {
  const auto manifest = manifest_of(cfg);
  const auto parts = data::split(
      manifest, data::SplitSpec{cfg.train_fraction, cfg.repeat_index, cfg.seed});
  const double lo = manifest.mos_min(), hi = manifest.mos_max();

  Checkpoint ck;
  eval::MetricPair gate;
  if (kind == "nar") {
    const auto refs = refs_of(cfg);
    ck = train::pretrain_nar_teacher(cfg, parts.train, parts.test, refs);
    const auto teacher =
        teachers::NarTeacher::from_checkpoint(ck, cfg.nar_config());
    gate = evaluate_nar_teacher(teacher, parts.test, refs, cfg, lo, hi);
  } else if (kind == "conv" || kind == "inv") {
    const auto bk =
        kind == "conv" ? teachers::BiasKind::kConv : teachers::BiasKind::kInv;
    ck = train::pretrain_bias_teacher(bk, cfg, parts.train, parts.test);
    const auto teacher =
        teachers::BiasTeacher::from_checkpoint(ck, cfg.bias_config(bk));
    gate = evaluate_bias_teacher(teacher, parts.test, cfg, lo, hi);
  } else {
    fail(Err::InvalidArgument, "teacher kind must be nar, conv or inv");
  }
  ck.rng_state_hex = Rng(cfg.seed).state_hex();
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  ck.save(out_path);
  std::printf("%s teacher: test srcc=%.4f plcc=%.4f n=%zu -> %s\n",
              kind.c_str(), gate.srcc, gate.plcc, gate.n, out_path.c_str());
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const auto manifest = manifest_of(cfg);
  const auto parts = data::split(
      manifest, data::SplitSpec{cfg.train_fraction, cfg.repeat_index, cfg.seed});
  data::ReferencePool refs;
  if (!cfg.no_nar) refs = refs_of(cfg);
  const LoadedTeachers loaded = load_teachers(cfg);

  train::DistillationTrainer trainer(cfg, loaded.set(), manifest.mos_min(),
                                     manifest.mos_max());
  auto run = trainer.run(parts.train, parts.test, refs);

  fs::create_directories(cfg.out_dir);
  run.best.rng_state_hex = Rng(cfg.seed).state_hex();
  run.last.rng_state_hex = run.best.rng_state_hex;
  run.best.save(cfg.out_dir + "/best.ckpt");
  run.last.save(cfg.out_dir + "/last.ckpt");
  write_text(cfg.out_dir + "/steps.csv", artifact_header(cfg) + run.step_csv);

  std::ostringstream epochs;
  epochs << artifact_header(cfg) << "epoch,lr,train_loss,val_srcc,val_plcc\n";
  for (const auto& row : run.epoch_rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.6f,%.6f,%.6f\n", row.epoch,
                  row.lr, row.mean_train_loss, row.val_srcc, row.val_plcc);
    epochs << buf;
  }
  write_text(cfg.out_dir + "/epochs.csv", epochs.str());
  write_text(cfg.out_dir + "/run_manifest.txt",
             artifact_header(cfg) + cfg.canonical_text());

  if (run.diverged) {
    std::fprintf(stderr,
                 "training diverged (non-finite loss); kept last good "
                 "checkpoint\n");
    return 1;
  }
  std::printf("final test srcc=%.4f plcc=%.4f (best epoch srcc=%.4f)\n",
              run.final_val_srcc, run.final_val_plcc, run.best_val_srcc);
  std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
             const std::string& split, const std::string& out_csv) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  const RunConfig train_cfg = RunConfig::from_text(ck.config_text);
  const auto manifest = manifest_of(cfg);

  data::DatasetManifest target;
  if (split == "all") {
    target = manifest;
  } else {
    const auto parts = data::split(manifest,
                                   data::SplitSpec{train_cfg.train_fraction,
                                                   train_cfg.repeat_index,
                                                   train_cfg.seed});
    target = split == "train" ? parts.train : parts.test;
  }
  const int crops = cfg.crops_eval;
  const auto m = eval::evaluate_checkpoint(ck, target, crops,
                                           derive_seed(cfg.seed, "eval"));
  const std::string dataset = fs::path(cfg.data_dir).filename().string();
  std::printf("dataset=%s split=%s srcc=%.4f plcc=%.4f n=%zu\n",
              dataset.c_str(), split.c_str(), m.srcc, m.plcc, m.n);

  if (!out_csv.empty()) {
    std::ostringstream row;
    const bool fresh = !fs::exists(out_csv);
    std::ofstream out(out_csv, std::ios::app);
    check(out.good(), Err::UnwritableDir, "cannot write: " + out_csv);
    if (fresh)
      out << "# run_config_hash: " << train_cfg.hash()
          << "\n# encoder_hash: " << train_cfg.encoder_hash()
          << "\ndataset,split_seed,srcc,plcc,n\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%zu\n", dataset.c_str(),
                  train_cfg.repeat_index, m.srcc, m.plcc, m.n);
    out << buf;
  }
  return 0;
}

int cmd_cross_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                   const std::vector<std::string>& tests,
                   const std::string& out_csv) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  const RunConfig train_cfg = RunConfig::from_text(ck.config_text);
  std::map<std::string, data::DatasetManifest> manifests;
  for (const auto& spec : tests) {
    const auto eq = spec.find('=');
    check(eq != std::string::npos, Err::InvalidArgument,
          "--test expects name=dir, got `" + spec + "`");
    manifests[spec.substr(0, eq)] =
        data::load_manifest(spec.substr(eq + 1) + "/manifest.csv");
  }
  const auto rows = eval::cross_evaluate(ck, manifests, cfg.crops_eval,
                                         derive_seed(cfg.seed, "cross_eval"));

  std::ostringstream csv;
  csv << "# run_config_hash: " << train_cfg.hash()
      << "\n# encoder_hash: " << train_cfg.encoder_hash()
      << "\ndataset,split_seed,srcc,plcc,n\n";
  for (const auto& [name, m] : rows) {
    std::printf("test=%s srcc=%.4f plcc=%.4f n=%zu\n", name.c_str(), m.srcc,
                m.plcc, m.n);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%zu\n", name.c_str(),
                  train_cfg.repeat_index, m.srcc, m.plcc, m.n);
    csv << buf;
  }
  if (!out_csv.empty()) write_text(out_csv, csv.str());
  return 0;
}

int cmd_infer(const std::string& checkpoint_path,
              const std::vector<std::string>& images, int crops,
              std::uint64_t seed) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  const auto loaded = eval::load_student(ck);
  const int use_crops = crops > 0 ? crops : loaded.crops_eval;
  for (const auto& path : images) {
    const Image8 img = load_image(path);
    const double score =
        eval::predict_one(loaded.model, img, use_crops,
                          derive_seed(seed, "infer", fnv1a64(path)),
                          loaded.norm, loaded.mos_min, loaded.mos_max);
    std::printf("%.6f\n", score);
  }
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& suite, int seeds) {
  const auto manifest = manifest_of(cfg);
  data::ReferencePool refs = refs_of(cfg);
  const LoadedTeachers loaded = load_teachers(cfg);

  std::map<std::string, train::SingleRun> cache;
  std::vector<std::string> suites =
      suite == "all" ? train::ablation_suites() : std::vector<std::string>{suite};
  fs::create_directories(cfg.out_dir);
  for (const auto& s : suites) {
    const auto result = train::run_ablation(s, cfg, manifest, refs,
                                            loaded.set(), seeds, &cache,
                                            /*verbose=*/true);
    write_text(cfg.out_dir + "/ablation_" + s + ".csv", result.csv());
    write_text(cfg.out_dir + "/ablation_" + s + ".md", result.markdown());
    std::printf("== %s ==\n%s", s.c_str(), result.markdown().c_str());
  }
  return 0;
}

int cmd_saliency(const std::string& checkpoint_path, const std::string& image,
                 const std::string& out_path) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  const auto loaded = eval::load_student(ck);
  const Image8 img = load_image(image);
  const auto map = eval::saliency_map(loaded.model, img, loaded.norm);
  save_ppm(eval::saliency_overlay(img, map), out_path);
  std::printf("saliency overlay written to %s\n", out_path.c_str());
  return 0;
}

int cmd_strip(const std::string& in_path, const std::string& out_path) {
  Checkpoint ck = Checkpoint::load(in_path);
  ck.keep_tags({"student"});
  ck.save(out_path);
  std::printf("student-only checkpoint written to %s (%zu arrays)\n",
              out_path.c_str(), ck.arrays.size());
  return 0;
}

}  // namespace rkiqt::cli
