// Copyright 2026 The DocIQ Authors
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

#include "dociq/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dociq/error.hpp"

namespace dociq::metrics {

void validate(std::span<const double> predicted, std::span<const double> ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorKind::kInvalidArgument, "score lists differ in length (" + std::to_string(predicted.size()) +
                                                 " vs " + std::to_string(ground_truth.size()) + ")");
  }
  if (predicted.size() < 3) throw Error(ErrorKind::kInvalidArgument, "at least 3 score pairs are required");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(predicted.begin(), predicted.end(), finite) ||
      !std::all_of(ground_truth.begin(), ground_truth.end(), finite)) {
    throw Error(ErrorKind::kInvalidArgument, "scores must be finite");
  }
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorKind::kUndefinedCorrelation,
                std::string(saa == 0.0 ? "predicted" : "ground-truth") + " scores are constant");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double plcc(std::span<const double> predicted, std::span<const double> ground_truth) {
  validate(predicted, ground_truth);
  return pearson(predicted, ground_truth);
}

double plcc(const ScorePairs& pairs) { return plcc(pairs.predicted, pairs.ground_truth); }

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> predicted, std::span<const double> ground_truth) {
  validate(predicted, ground_truth);
  const auto rp = fractional_ranks(predicted);
  const auto rg = fractional_ranks(ground_truth);
  return pearson(rp, rg);
}

double srcc(const ScorePairs& pairs) { return srcc(pairs.predicted, pairs.ground_truth); }

namespace {

double logistic(const std::array<double, 4>& b, double x) {
  const double s = std::max(std::abs(b[3]), 1e-12);
  return (b[0] - b[1]) / (1.0 + std::exp(-(x - b[2]) / s)) + b[1];
}

double sse(const std::array<double, 4>& b, std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = logistic(b, x[i]) - y[i];
    acc += r * r;
  }
  return acc;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> predicted, std::span<const double> ground_truth) {
  validate(predicted, ground_truth);
  const double n = static_cast<double>(predicted.size());
  const double mean_x = std::accumulate(predicted.begin(), predicted.end(), 0.0) / n;
  double var_x = 0.0;
  for (double v : predicted) var_x += (v - mean_x) * (v - mean_x);
  const double sd_x = std::sqrt(var_x / n);
  if (sd_x == 0.0) throw Error(ErrorKind::kUndefinedCorrelation, "predicted scores are constant");

  std::array<double, 4> beta = {*std::max_element(ground_truth.begin(), ground_truth.end()),
                                *std::min_element(ground_truth.begin(), ground_truth.end()), mean_x, sd_x};
  double lambda = 1e-3;
  double current = sse(beta, predicted, ground_truth);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    const double s = std::max(std::abs(beta[3]), 1e-12);
    const double sign = beta[3] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double z = (predicted[i] - beta[2]) / s;
      const double e = 1.0 / (1.0 + std::exp(-z));
      const double de = e * (1.0 - e);
      Eigen::Vector4d jac;
      jac << e, 1.0 - e, -(beta[0] - beta[1]) * de / s, -(beta[0] - beta[1]) * de * z / s * sign;
      const double r = logistic(beta, predicted[i]) - ground_truth[i];
      jtj += jac * jac.transpose();
      jtr += jac * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 20 && !improved; ++attempt) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector4d step = damped.ldlt().solve(-jtr);
      std::array<double, 4> trial = beta;
      for (int k = 0; k < 4; ++k) trial[static_cast<std::size_t>(k)] += step[k];
      const double value = sse(trial, predicted, ground_truth);
      if (std::isfinite(value) && value < current) {
        const double gain = current - value;
        beta = trial;
        current = value;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain < 1e-14 * (1.0 + current)) iter = 200;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  LogisticFit fit;
  fit.beta = beta;
  fit.mapped.reserve(predicted.size());
  for (double x : predicted) fit.mapped.push_back(logistic(beta, x));
  return fit;
}

double plcc_logistic(std::span<const double> predicted, std::span<const double> ground_truth) {
  const auto fit = fit_logistic(predicted, ground_truth);
  return pearson(fit.mapped, ground_truth);
}

}  // namespace dociq::metrics
