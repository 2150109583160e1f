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

#include "rkiqt/eval/evaluate.hpp"

#include <charconv>

#include "rkiqt/cli/config.hpp"

namespace rkiqt::eval {

const Image8& ImageCache::get(const std::string& path) {
  auto it = cache_.find(path);
  if (it == cache_.end()) it = cache_.emplace(path, load_image(path)).first;
  return it->second;
}

namespace {

double denormalize(double y, double mos_min, double mos_max) {
  return y * (mos_max - mos_min) + mos_min;
}

double score_image(const student::StudentModel& model, const Image8& img,
                   const std::string& id, int crops, std::uint64_t seed,
                   const data::PixelNorm& norm) {
  NoGradGuard guard;
  Rng rng(seed);
  data::PatchBatch batch = data::crop_patches(img, id, 0.0, crops,
                                              model.config().image_size, rng);
  Tensor pixels = data::normalize_pixels(batch.pixels, norm);
  const auto out = model.forward(pixels);
  double mean = 0;
  for (double v : out.y_cls.data()) mean += v;
  return mean / double(out.y_cls.numel());
}

}  // namespace

std::vector<double> predict_scores(const student::StudentModel& model,
                                   const data::DatasetManifest& manifest,
                                   int crops, std::uint64_t seed,
                                   const data::PixelNorm& norm, double mos_min,
                                   double mos_max, ImageCache* cache) {
  check(!manifest.empty(), Err::EmptyManifest, "predict on empty manifest");
  ImageCache local;
  ImageCache& images = cache ? *cache : local;
  std::vector<double> scores;
  scores.reserve(manifest.size());
  for (const auto& rec : manifest.records) {
    const auto rec_seed = derive_seed(seed, "eval_crops", fnv1a64(rec.id));
    const double y = score_image(model, images.get(rec.path), rec.id, crops,
                                 rec_seed, norm);
    scores.push_back(denormalize(y, mos_min, mos_max));
  }
  return scores;
}

double predict_one(const student::StudentModel& model, const Image8& image,
                   int crops, std::uint64_t seed, const data::PixelNorm& norm,
                   double mos_min, double mos_max) {
  const double y = score_image(model, image, "image", crops, seed, norm);
  return denormalize(y, mos_min, mos_max);
}

MetricPair evaluate_model(const student::StudentModel& model,
                          const data::DatasetManifest& manifest, int crops,
                          std::uint64_t seed, const data::PixelNorm& norm,
                          double mos_min, double mos_max, bool logistic4,
                          ImageCache* cache) {
  std::vector<double> pred = predict_scores(model, manifest, crops, seed, norm,
                                            mos_min, mos_max, cache);
  std::vector<double> gt;
  gt.reserve(manifest.size());
  for (const auto& rec : manifest.records) gt.push_back(rec.mos);
  if (logistic4) {
    MetricPair m;
    m.srcc = srcc(pred, gt);  // rank metric unaffected by the monotone remap
    m.plcc = plcc(logistic4_fit(pred, gt), gt);
    m.n = pred.size();
    return m;
  }
  return metrics(pred, gt);
}

LoadedStudent load_student(const Checkpoint& ck) {
  const cli::RunConfig cfg = cli::RunConfig::from_text(ck.config_text);
  LoadedStudent out{
      student::StudentModel::from_checkpoint(ck, cfg.encoder_config()),
      cfg.pixel_norm(),
      0,
      1,
      cfg.crops_eval,
      cfg.logistic4,
      ck.config_text};
  Tensor range = ck.get("meta.mos_range");
  check(range.numel() == 2, Err::BadCheckpoint, "bad meta.mos_range");
  out.mos_min = range.data()[0];
  out.mos_max = range.data()[1];
  return out;
}

MetricPair evaluate_checkpoint(const Checkpoint& ck,
                               const data::DatasetManifest& manifest,
                               int crops, std::uint64_t seed) {
  LoadedStudent s = load_student(ck);
  return evaluate_model(s.model, manifest, crops, seed, s.norm, s.mos_min,
                        s.mos_max, s.logistic4);
}

std::map<std::string, MetricPair> cross_evaluate(
    const Checkpoint& ck,
    const std::map<std::string, data::DatasetManifest>& test_manifests,
    int crops, std::uint64_t seed) {
  LoadedStudent s = load_student(ck);
  std::map<std::string, MetricPair> out;
  for (const auto& [name, manifest] : test_manifests)
    out[name] = evaluate_model(s.model, manifest, crops, seed, s.norm,
                               s.mos_min, s.mos_max, s.logistic4);
  return out;
}

}  // namespace rkiqt::eval
