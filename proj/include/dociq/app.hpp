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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dociq/image.hpp"
#include "dociq/train.hpp"

namespace dociq::app {

/// Command-line entry point; args exclude the program name. Returns 0 on
/// success, 2 for usage errors and 1 for failures inside a module.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Accepts a corpus directory or a manifest file.
std::filesystem::path resolve_manifest(const std::filesystem::path& data);

struct TrainRunOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  train::Ablations ablations;
  bool desk = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> max_steps;
};

struct TrainRunSummary {
  train::RunConfig config;
  train::TrainResult result;
  std::optional<train::EvaluationReport> test;
  std::string test_error;
  std::size_t parameter_count = 0;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::size_t test_samples = 0;
};

/// Split, train, evaluate on the held-out split and write model.ckpt,
/// train_log.jsonl, config.txt, splits.json, metrics.json and report.json
/// under options.out.
TrainRunSummary run_training(const TrainRunOptions& options);

// ---------------------------------------------------------------------------
// MOS histograms

inline constexpr int kHistogramBins = 20;

/// Counts per equal-width bin over [lo, hi]; hi itself falls in the last bin.
std::vector<int> histogram(std::span<const double> values, double lo, double hi, int bins = kHistogramBins);

/// Bar chart of the counts on a white canvas.
RgbImage render_histogram(std::span<const int> counts, ImageSize size = {240, 400});

}  // namespace dociq::app
