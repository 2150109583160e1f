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

// Renders results CSVs to markdown. Rows from different encoder
// architectures never land in one table.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rkiqt/cli/commands.hpp"
#include "rkiqt/train/ablation.hpp"

namespace rkiqt::cli {

namespace {

struct ParsedCsv {
  std::string encoder_hash;
  std::string config_hash;
  std::vector<std::string> header;  // column names
  std::vector<std::vector<std::string>> rows;
};

ParsedCsv parse_csv(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), Err::MissingFile, "cannot open results csv: " + path);
  ParsedCsv out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        const std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        const auto b = value.find_first_not_of(' ');
        if (b != std::string::npos) value = value.substr(b);
        if (key.find("encoder_hash") != std::string::npos)
          out.encoder_hash = value;
        if (key.find("run_config_hash") != std::string::npos)
          out.config_hash = value;
      }
      continue;
    }
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
    if (out.header.empty())
      out.header = cols;
    else
      out.rows.push_back(cols);
  }
  check(!out.header.empty(), Err::MalformedRow, "empty results csv: " + path);
  return out;
}

}  // namespace

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_path) {
  check(!inputs.empty(), Err::InvalidArgument, "report: no input csv files");

  std::string encoder_hash;
  // grouped[key] -> (label -> (srcc values, plcc values))
  std::map<std::string, std::map<std::string, std::pair<std::vector<double>,
                                                        std::vector<double>>>>
      grouped;

  for (const auto& path : inputs) {
    const ParsedCsv csv = parse_csv(path);
    if (!csv.encoder_hash.empty()) {
      if (encoder_hash.empty()) {
        encoder_hash = csv.encoder_hash;
      } else {
        check(encoder_hash == csv.encoder_hash, Err::InvalidArgument,
              "report: refusing to merge rows with mismatched encoder "
              "configs (" + encoder_hash + " vs " + csv.encoder_hash +
                  " in " + path + ")");
      }
    }
    // two schemas: dataset,split_seed,srcc,plcc,n  |  suite,method,seed,srcc,plcc
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < csv.header.size(); ++i)
      col[csv.header[i]] = int(i);
    check(col.count("srcc") && col.count("plcc"), Err::MalformedRow,
          "results csv must have srcc and plcc columns: " + path);
    const bool is_ablation = col.count("method") > 0;
    for (const auto& row : csv.rows) {
      const std::string table =
          is_ablation ? row[std::size_t(col["suite"])] : "results";
      const std::string label = is_ablation
                                    ? row[std::size_t(col["method"])]
                                    : row[std::size_t(col["dataset"])];
      auto& bucket = grouped[table][label];
      bucket.first.push_back(std::stod(row[std::size_t(col["srcc"])]));
      bucket.second.push_back(std::stod(row[std::size_t(col["plcc"])]));
    }
  }

  std::ostringstream md;
  md << "# Results\n\n";
  if (!encoder_hash.empty()) md << "encoder config: `" << encoder_hash << "`\n\n";
  char buf[128];
  for (const auto& [table, labels] : grouped) {
    md << "## " << table << "\n\n";
    md << "| " << (table == "results" ? "Dataset" : "Method")
       << " | PLCC | SRCC | runs |\n|---|---|---|---|\n";
    for (const auto& [label, vals] : labels) {
      const auto& [srcc_v, plcc_v] = vals;
      std::snprintf(buf, sizeof(buf), "| %s | %.3f ± %.3f | %.3f ± %.3f | %zu |\n",
                    label.c_str(), train::mean_of(plcc_v), train::std_of(plcc_v),
                    train::mean_of(srcc_v), train::std_of(srcc_v),
                    srcc_v.size());
      md << buf;
    }
    md << '\n';
  }

  if (out_path.empty()) {
    std::fputs(md.str().c_str(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    check(out.good(), Err::UnwritableDir, "cannot write report: " + out_path);
    out << md.str();
    std::printf("report written to %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace rkiqt::cli
