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

#pragma once

#include <array>
#include <span>
#include <vector>

namespace dociq::metrics {

/// Predicted and ground-truth scores for the same items, index-aligned.
/// Requires equal lengths >= 3 and finite values.
struct ScorePairs {
  std::vector<double> predicted;
  std::vector<double> ground_truth;
};

void validate(std::span<const double> predicted, std::span<const double> ground_truth);

/// Pearson linear correlation. Throws Error(kUndefinedCorrelation) when either
/// list is constant.
double plcc(std::span<const double> predicted, std::span<const double> ground_truth);
double plcc(const ScorePairs& pairs);

/// Spearman rank correlation: Pearson correlation of fractional ranks
/// (ties share the average of the ranks they span).
double srcc(std::span<const double> predicted, std::span<const double> ground_truth);
double srcc(const ScorePairs& pairs);

/// 1-based ranks; tied values receive the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

/// f(x) = (b1 - b2) / (1 + exp(-(x - b3) / |b4|)) + b2, least squares.
struct LogisticFit {
  std::array<double, 4> beta{};
  std::vector<double> mapped;
};

LogisticFit fit_logistic(std::span<const double> predicted, std::span<const double> ground_truth);

/// PLCC after mapping predictions through the fitted 4-parameter logistic.
double plcc_logistic(std::span<const double> predicted, std::span<const double> ground_truth);

}  // namespace dociq::metrics
