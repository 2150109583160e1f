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

#pragma once

#include <cstddef>
#include <vector>

namespace rkiqt::eval {

struct MetricPair {
  double srcc = 0;
  double plcc = 0;
  std::size_t n = 0;
};

// Average ranks for ties (fractional ranking), 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

// Pearson correlation; rejects length < 3, length mismatch, constant input.
double plcc(const std::vector<double>& pred, const std::vector<double>& gt);

// Spearman: Pearson over average ranks.
double srcc(const std::vector<double>& pred, const std::vector<double>& gt);

MetricPair metrics(const std::vector<double>& pred,
                   const std::vector<double>& gt);

// 4-parameter logistic remap fitted by coordinate descent; optional
// preprocessing for PLCC (off by default everywhere).
std::vector<double> logistic4_fit(const std::vector<double>& pred,
                                  const std::vector<double>& gt);

}  // namespace rkiqt::eval
