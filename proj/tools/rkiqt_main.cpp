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

#include <cstdio>

#include "CLI11.hpp"
#include "rkiqt/cli/commands.hpp"
#include "rkiqt/core/kernels.hpp"

using namespace rkiqt;

int main(int argc, char** argv) {
  CLI::App app{"rkiqt: reference-knowledge-guided no-reference image quality"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  app.add_option("--config", config_file, "flat key = value config file")
      ->envname("RKIQT_CONFIG");
  app.add_option("--set", sets, "override a config key (key=value), repeatable");

  std::string keys_help;
  for (const auto& key : cli::config_registry())
    keys_help += "  " + key.name + " = " + key.default_value + "\n      " +
                 key.description + "\n";
  app.footer("config keys (defaults shown):\n" + keys_help +
             "\nenvironment: RKIQT_SEED overrides the root seed, "
             "RKIQT_THREADS the worker count,\nRKIQT_KERNELS=scalar|avx2|neon "
             "forces a compute lane (active: " +
             std::string(kern::active().name) + ")");

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  std::string synth_out = "toyset";
  int bases = 20, levels = 5, base_size = 96;
  std::string families = "blur,noise,jpeg";
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--bases", bases, "pristine base images");
  synth->add_option("--levels", levels, "severity levels incl. pristine");
  synth->add_option("--families", families, "comma list: blur,noise,jpeg");
  synth->add_option("--size", base_size, "base image side length");

  // pretrain-teacher
  auto* pre = app.add_subcommand("pretrain-teacher", "train a frozen teacher");
  std::string teacher_kind = "conv", teacher_out = "teacher.ckpt";
  pre->add_option("--kind", teacher_kind, "nar | conv | inv")->required();
  pre->add_option("--out", teacher_out, "checkpoint path");

  // train
  auto* tr = app.add_subcommand("train", "distill the student");
  bool flag_no_nar = false, flag_no_regular = false;
  tr->add_flag("--no-nar", flag_no_nar, "drop reference-feature distillation");
  tr->add_flag("--no-regular", flag_no_regular, "drop logit regularization");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_split = "test", eval_out;
  ev->add_option("--checkpoint", eval_ckpt)->required();
  ev->add_option("--split", eval_split, "test | train | all");
  ev->add_option("--out", eval_out, "append results csv here");

  // cross-eval
  auto* cross = app.add_subcommand("cross-eval",
                                   "evaluate on other datasets, no tuning");
  std::string cross_ckpt, cross_out;
  std::vector<std::string> cross_tests;
  cross->add_option("--checkpoint", cross_ckpt)->required();
  cross->add_option("--test", cross_tests, "name=dataset_dir, repeatable")
      ->required();
  cross->add_option("--out", cross_out, "results csv path");

  // infer
  auto* inf = app.add_subcommand("infer", "score images, one per line");
  std::string infer_ckpt;
  std::vector<std::string> infer_images;
  int infer_crops = 0;
  std::uint64_t infer_seed = 0;
  inf->add_option("checkpoint", infer_ckpt)->required();
  inf->add_option("images", infer_images, "image files")->required();
  inf->add_option("--crops", infer_crops, "crops per image (0 = config)");
  inf->add_option("--seed", infer_seed, "crop seed");

  // ablate
  auto* ab = app.add_subcommand("ablate", "run an ablation grid");
  std::string suite = "overall";
  int ab_seeds = 5;
  ab->add_option("--suite", suite,
                 "overall | mcd_vs_drd | mask_policies | inter_layer | all");
  ab->add_option("--seeds", ab_seeds, "split repeats per cell");

  // report
  auto* rep = app.add_subcommand("report", "render results csvs to markdown");
  std::vector<std::string> report_in;
  std::string report_out;
  rep->add_option("--in", report_in, "input csv files")->required();
  rep->add_option("--out", report_out, "output markdown (stdout if empty)");

  // saliency
  auto* sal = app.add_subcommand("saliency", "write an activation overlay");
  std::string sal_ckpt, sal_image, sal_out = "saliency.ppm";
  sal->add_option("--checkpoint", sal_ckpt)->required();
  sal->add_option("--image", sal_image)->required();
  sal->add_option("--out", sal_out);

  // strip
  auto* st = app.add_subcommand("strip",
                                "keep only the student arrays of a checkpoint");
  std::string strip_in, strip_out;
  st->add_option("input", strip_in)->required();
  st->add_option("output", strip_out)->required();

  for (auto* sub : app.get_subcommands(
           [](const CLI::App*) { return true; }))
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig cfg = cli::resolve_config(config_file, sets);
    if (synth->parsed())
      return cli::cmd_synth(cfg, synth_out, bases, levels, families, base_size);
    if (pre->parsed()) return cli::cmd_pretrain_teacher(cfg, teacher_kind, teacher_out);
    if (tr->parsed()) {
      if (flag_no_nar) cfg.no_nar = true;
      if (flag_no_regular) cfg.no_regular = true;
      return cli::cmd_train(cfg);
    }
    if (ev->parsed()) return cli::cmd_eval(cfg, eval_ckpt, eval_split, eval_out);
    if (cross->parsed())
      return cli::cmd_cross_eval(cfg, cross_ckpt, cross_tests, cross_out);
    if (inf->parsed())
      return cli::cmd_infer(infer_ckpt, infer_images, infer_crops, infer_seed);
    if (ab->parsed()) return cli::cmd_ablate(cfg, suite, ab_seeds);
    if (rep->parsed()) return cli::cmd_report(report_in, report_out);
    if (sal->parsed()) return cli::cmd_saliency(sal_ckpt, sal_image, sal_out);
    if (st->parsed()) return cli::cmd_strip(strip_in, strip_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", err_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
