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

#include "rkiqt/train/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace rkiqt::train {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SingleRun run_single_experiment(cli::RunConfig cfg,
                                const data::DatasetManifest& manifest,
                                const data::ReferencePool& refs,
                                const TeacherSet& teachers, int repeat_index) {
  const auto parts = data::split(
      manifest,
      data::SplitSpec{cfg.train_fraction, repeat_index, cfg.seed});
  cfg.seed = derive_seed(cfg.seed, "repeat", std::uint64_t(repeat_index));

  DistillationTrainer trainer(cfg, teachers, manifest.mos_min(),
                              manifest.mos_max());
  const auto run = trainer.run(parts.train, parts.test, refs);

  SingleRun out;
  out.diverged = run.diverged;
  out.srcc = run.final_val_srcc;
  out.plcc = run.final_val_plcc;
  if (!run.epoch_rows.empty())
    out.final_train_loss = run.epoch_rows.back().mean_train_loss;
  return out;
}

namespace {

struct CellSpec {
  std::string method;
  std::function<void(cli::RunConfig&)> tweak;
};

std::vector<CellSpec> cells_for(const std::string& suite) {
  if (suite == "overall")
    return {{"baseline",
             [](cli::RunConfig& c) {
               c.no_nar = true;
               c.no_regular = true;
             }},
            {"w/o Regular.", [](cli::RunConfig& c) { c.no_regular = true; }},
            {"w/o NAR", [](cli::RunConfig& c) { c.no_nar = true; }},
            {"full", [](cli::RunConfig&) {}}};
  if (suite == "mcd_vs_drd")
    return {{"baseline",
             [](cli::RunConfig& c) {
               c.no_nar = true;
               c.no_regular = true;
             }},
            {"w/ DRD", [](cli::RunConfig& c) { c.feature_mode = "drd"; }},
            {"w/ MCD", [](cli::RunConfig& c) { c.feature_mode = "mcd"; }}};
  if (suite == "mask_policies") {
    std::vector<CellSpec> cells;
    for (auto policy : ops::all_mask_policies()) {
      const std::string name = ops::mask_policy_name(policy);
      cells.push_back(
          {name, [name](cli::RunConfig& c) { c.mask_policy = name; }});
    }
    return cells;
  }
  if (suite == "inter_layer")
    return {{"baseline",
             [](cli::RunConfig& c) {
               c.no_nar = true;
               c.no_regular = true;
             }},
            {"w/o Inter-layer",
             [](cli::RunConfig& c) { c.inter_layer = false; }},
            {"w/ Inter-layer", [](cli::RunConfig&) {}}};
  fail(Err::InvalidArgument, "unknown ablation suite: " + suite);
}

}  // namespace

std::vector<std::string> ablation_suites() {
  return {"overall", "mcd_vs_drd", "mask_policies", "inter_layer"};
}

AblationResult run_ablation(const std::string& suite,
                            const cli::RunConfig& base,
                            const data::DatasetManifest& manifest,
                            const data::ReferencePool& refs,
                            const TeacherSet& teachers, int seeds,
                            std::map<std::string, SingleRun>* cache,
                            bool verbose) {
  AblationResult result;
  result.suite = suite;
  result.config_hash = base.hash();
  result.encoder_hash = base.encoder_hash();

  for (const auto& cell_spec : cells_for(suite)) {
    AblationCell cell;
    cell.method = cell_spec.method;
    for (int s = 0; s < seeds; ++s) {
      cli::RunConfig cfg = base;
      cell_spec.tweak(cfg);
      const std::string key = cfg.hash() + ":" + std::to_string(s);
      SingleRun run;
      if (cache && cache->count(key)) {
        run = (*cache)[key];
      } else {
        run = run_single_experiment(cfg, manifest, refs, teachers, s);
        if (cache) (*cache)[key] = run;
      }
      if (verbose)
        std::fprintf(stderr, "  [%s] %s seed %d: srcc=%.4f plcc=%.4f%s\n",
                     suite.c_str(), cell.method.c_str(), s, run.srcc, run.plcc,
                     run.diverged ? " (diverged)" : "");
      cell.srcc.push_back(run.srcc);
      cell.plcc.push_back(run.plcc);
    }
    cell.srcc_mean = mean_of(cell.srcc);
    cell.srcc_std = std_of(cell.srcc);
    cell.plcc_mean = mean_of(cell.plcc);
    cell.plcc_std = std_of(cell.plcc);
    result.cells.push_back(std::move(cell));
  }
  return result;
}

std::string AblationResult::csv() const {
  std::ostringstream out;
  out << "# run_config_hash: " << config_hash << '\n';
  out << "# encoder_hash: " << encoder_hash << '\n';
  out << "suite,method,seed,srcc,plcc\n";
  char buf[64];
  for (const auto& cell : cells)
    for (std::size_t s = 0; s < cell.srcc.size(); ++s) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", cell.srcc[s], cell.plcc[s]);
      out << suite << ',' << cell.method << ',' << s << ',' << buf << '\n';
    }
  return out.str();
}

std::string AblationResult::markdown() const {
  std::ostringstream out;
  out << "| Method | PLCC | SRCC |\n|---|---|---|\n";
  char buf[96];
  for (const auto& cell : cells) {
    std::snprintf(buf, sizeof(buf),
                  "| %s | %.3f ± %.3f | %.3f ± %.3f |\n", cell.method.c_str(),
                  cell.plcc_mean, cell.plcc_std, cell.srcc_mean, cell.srcc_std);
    out << buf;
  }
  return out.str();
}

}  // namespace rkiqt::train
