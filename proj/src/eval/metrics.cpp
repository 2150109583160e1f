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

#include "rkiqt/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rkiqt/core/error.hpp"

namespace rkiqt::eval {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (double(i + 1) + double(j + 1)) / 2.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_inputs(const std::vector<double>& pred,
                  const std::vector<double>& gt) {
  check(pred.size() == gt.size(), Err::LengthMismatch,
        "metric inputs differ in length");
  check(pred.size() >= 3, Err::TooFewSamples,
        "metrics need at least 3 samples, got " + std::to_string(pred.size()));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  check(va > 0 && vb > 0, Err::ConstantInput,
        "correlation undefined for constant input");
  return cov / std::sqrt(va * vb);
}

}  // namespace

double plcc(const std::vector<double>& pred, const std::vector<double>& gt) {
  check_inputs(pred, gt);
  return pearson(pred, gt);
}

double srcc(const std::vector<double>& pred, const std::vector<double>& gt) {
  check_inputs(pred, gt);
  return pearson(average_ranks(pred), average_ranks(gt));
}

MetricPair metrics(const std::vector<double>& pred,
                   const std::vector<double>& gt) {
  return MetricPair{srcc(pred, gt), plcc(pred, gt), pred.size()};
}

std::vector<double> logistic4_fit(const std::vector<double>& pred,
                                  const std::vector<double>& gt) {
  check_inputs(pred, gt);
  // f(x) = b1 + (b2 - b1) / (1 + exp(-(x - b3)/|b4|))
  double lo = *std::min_element(gt.begin(), gt.end());
  double hi = *std::max_element(gt.begin(), gt.end());
  double mid = 0, spread = 0;
  for (double p : pred) mid += p;
  mid /= double(pred.size());
  for (double p : pred) spread += (p - mid) * (p - mid);
  spread = std::sqrt(spread / double(pred.size())) + 1e-9;

  double b1 = lo, b2 = hi, b3 = mid, b4 = spread;
  auto loss = [&](double p1, double p2, double p3, double p4) {
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double f = p1 + (p2 - p1) / (1.0 + std::exp(-(pred[i] - p3) / p4));
      s += (f - gt[i]) * (f - gt[i]);
    }
    return s;
  };
  // coarse coordinate descent; only a preprocessing convenience
  double step = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    bool improved = false;
    double* coords[4] = {&b1, &b2, &b3, &b4};
    const double scales[4] = {hi - lo + 1e-9, hi - lo + 1e-9, spread, spread};
    for (int c = 0; c < 4; ++c) {
      const double base = loss(b1, b2, b3, b4);
      for (double dir : {+1.0, -1.0}) {
        const double save = *coords[c];
        *coords[c] = save + dir * step * scales[c] * 0.1;
        if (c == 3 && std::fabs(*coords[c]) < 1e-9) *coords[c] = save;
        if (loss(b1, b2, b3, b4) < base) {
          improved = true;
          break;
        }
        *coords[c] = save;
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-6) break;
  }

  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    out[i] = b1 + (b2 - b1) / (1.0 + std::exp(-(pred[i] - b3) / b4));
  return out;
}

}  // namespace rkiqt::eval
