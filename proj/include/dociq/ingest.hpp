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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dociq/corpus.hpp"

namespace dociq::ingest {

struct DimensionScores {
  std::string dimension;
  /// One slot per rater position; nullopt marks a missing or rejected score.
  std::vector<std::optional<double>> scores;
  double mos = 0.0;
  double mos_sd = 0.0;  // population sd, reporting only

  std::size_t present_count() const;
};

struct DocumentSample {
  std::string image;  // as written in the manifest
  std::optional<std::string> mask;
  std::string origin_id;
  std::optional<std::string> batch;
  std::vector<DimensionScores> rater_scores;
  std::optional<corpus::PipelineTrace> trace;
  /// Unrecognised record fields, kept so manifests round-trip.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  /// Directory the relative paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path image_path() const { return base_dir / image; }
  std::optional<std::filesystem::path> mask_path() const;
  const DimensionScores* find(std::string_view dimension) const;
  double mos(std::string_view dimension) const;
};

struct ScoreRange {
  double min = 1.0;
  double max = 5.0;
};

struct LoadOptions {
  /// Defaults to the range in a sibling corpus_meta.json, else [1, 5].
  std::optional<ScoreRange> score_range;
  bool verify_files = true;
};

/// Reads manifest.jsonl. Blank lines are skipped. Throws Error(kParse) naming
/// the line for malformed records, out-of-range scores or a stored MOS that
/// disagrees with the scores, and Error(kIntegrity) for missing files.
std::vector<DocumentSample> load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
ScoreRange manifest_score_range(const std::filesystem::path& manifest);

nlohmann::ordered_json to_json(const DocumentSample& sample);
void write_manifest(const std::filesystem::path& path, const std::vector<DocumentSample>& samples);

/// Recomputes mos and mos_sd from the present scores. Throws
/// Error(kMissingScores) when a dimension has none.
void aggregate_mos(std::vector<DocumentSample>& samples);
void aggregate_mos(DocumentSample& sample);

// ---------------------------------------------------------------------------
// BT.500 screening

struct RaterMatrix {
  std::vector<std::string> rater_ids;
  std::vector<std::string> image_ids;
  std::vector<std::optional<double>> scores;  // raters x images, row-major

  RaterMatrix() = default;
  RaterMatrix(std::vector<std::string> raters, std::vector<std::string> images);

  int rater_count() const { return static_cast<int>(rater_ids.size()); }
  int image_count() const { return static_cast<int>(image_ids.size()); }
  std::optional<double>& at(int rater, int image) {
    return scores[static_cast<std::size_t>(rater) * image_ids.size() + static_cast<std::size_t>(image)];
  }
  const std::optional<double>& at(int rater, int image) const {
    return scores[static_cast<std::size_t>(rater) * image_ids.size() + static_cast<std::size_t>(image)];
  }
  void validate() const;
};

struct RaterStatistics {
  std::string rater_id;
  int compared = 0;  // images with enough ratings to form a band
  int above = 0;     // P
  int below = 0;     // Q
};

struct ScreeningResult {
  RaterMatrix matrix;
  std::vector<std::string> rejected;
  int rounds = 0;
};

inline constexpr double kRejectFraction = 0.05;
inline constexpr double kRejectSymmetry = 0.3;

/// One pass of the subject-rejection counts over the given matrix.
std::vector<RaterStatistics> bt500_counts(const RaterMatrix& matrix);
bool bt500_reject(const RaterStatistics& stats);

/// Repeats the rejection pass on the retained raters until no rater is
/// rejected. Needs >= 3 raters and >= 2 images; throws
/// Error(kScreeningDegenerate) if fewer than 3 raters survive.
ScreeningResult screen_raters(const RaterMatrix& matrix);

struct GroupScreening {
  std::string batch;
  std::string dimension;
  int raters = 0;
  int images = 0;
  std::vector<std::string> rejected;
  bool skipped = false;  // too few raters or images to screen
};

/// Screens each (batch, dimension) group independently, nulls the rejected
/// raters' entries and recomputes MOS. Rater ids are the score positions.
std::vector<GroupScreening> screen_samples(std::vector<DocumentSample>& samples);

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool group_by_origin = true;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles origin groups with the seed and fills train while doing so keeps
/// it closest to the target size. Both sides receive at least one group;
/// fewer than two groups throws Error(kSplitInfeasible).
SplitIndices split_indices(const std::vector<DocumentSample>& samples, const SplitSpec& spec);
std::pair<std::vector<DocumentSample>, std::vector<DocumentSample>> split_dataset(
    const std::vector<DocumentSample>& samples, const SplitSpec& spec);

}  // namespace dociq::ingest
