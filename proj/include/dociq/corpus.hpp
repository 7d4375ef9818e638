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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dociq/image.hpp"

namespace dociq::corpus {

// ---------------------------------------------------------------------------
// Documents

struct SyntheticDocument {
  RgbImage image;
  LayoutMask mask;
  std::uint64_t seed = 0;
};

inline constexpr int kMinDocumentSide = 64;

/// White page with procedurally placed text-line blocks, ruled tables and
/// filled figures; the mask labels each block's rectangle with its class.
/// Pure function of (seed, size).
SyntheticDocument render_document(std::uint64_t seed, ImageSize size);

// ---------------------------------------------------------------------------
// Capture distortions

enum class DistortionKind { kShadow, kOcclusion, kBlur, kCreases, kMoire };
inline constexpr std::array<DistortionKind, 5> kAllDistortions = {
    DistortionKind::kShadow, DistortionKind::kOcclusion, DistortionKind::kBlur, DistortionKind::kCreases,
    DistortionKind::kMoire};

std::string_view to_string(DistortionKind kind);
/// Throws Error(kUnsupportedDistortion) for unknown names.
DistortionKind distortion_from_string(std::string_view name);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::kBlur;
  double severity = 0.0;  // [0, 1]; 0 is the identity
  std::uint64_t seed = 0;
};

RgbImage apply_distortion(const RgbImage& image, const DistortionSpec& spec);

// ---------------------------------------------------------------------------
// Enhancement pipeline

enum class Stage { kBoundary, kDewarp, kDemoire, kOcclusionRemoval, kDeblur, kDeshadow, kEnhancement };
inline constexpr int kStageCount = 7;
inline constexpr int kSkip = -1;
inline constexpr int kVariantsPerImage = 10;

/// Number of interchangeable algorithms per stage. Boundary detection has a
/// single mandatory implementation.
inline constexpr std::array<int, kStageCount> kStageOptions = {1, 3, 2, 2, 3, 4, 9};

std::string_view stage_name(Stage stage);
/// Throws Error(kParse) for unknown names.
Stage stage_from_name(std::string_view name);

struct PipelineTrace {
  std::vector<Stage> stage_order;
  std::array<int, kStageCount> choices{};  // indexed by Stage; kSkip or an option index
  int variant_index = 0;

  int choice(Stage s) const { return choices[static_cast<std::size_t>(s)]; }
  /// Structural check: fixed prefix, permuted tail, option bounds.
  bool valid() const;

  friend bool operator==(const PipelineTrace&, const PipelineTrace&) = default;
};

nlohmann::ordered_json to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(const nlohmann::json& j);

/// Applies one stage algorithm. option must be within kStageOptions.
RgbImage apply_stage(const RgbImage& image, Stage stage, int option);
RgbImage apply_trace(const RgbImage& image, const PipelineTrace& trace);

struct EnhancedVariant {
  RgbImage image;
  PipelineTrace trace;
};

/// Ten randomized pipeline runs over one capture. Each stage after boundary
/// detection draws uniformly from {skip, option 1..k}; the deblur / deshadow /
/// enhancement order is a uniform permutation. A trace equal to an earlier
/// one is redrawn (up to 100 times).
std::vector<EnhancedVariant> run_enhancement_pipeline(const RgbImage& image, std::uint64_t seed);

/// The ten traces run_enhancement_pipeline(image, seed) would apply.
std::vector<PipelineTrace> sample_traces(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulated raters

struct SimulatedRatingConfig {
  int rater_count = 15;
  std::vector<std::string> dimensions = {"overall", "sharpness", "color_fidelity"};
  double score_min = 1.0;
  double score_max = 5.0;
  double rater_noise_sd = 0.4;
  double rater_bias_sd = 0.3;
  /// Seeds the per-rater biases so one panel keeps the same leanings across
  /// every image it scores.
  std::uint64_t panel_seed = 0;

  void validate() const;
};

nlohmann::ordered_json to_json(const SimulatedRatingConfig& config);
SimulatedRatingConfig rating_config_from_json(const nlohmann::json& j);

/// Full-reference quality in [0, 1] per dimension; 1 means indistinguishable.
struct LatentQuality {
  double overall = 0.0;
  double sharpness = 0.0;
  double color_fidelity = 0.0;
};

/// Mean absolute 4-neighbour Laplacian of luma over interior pixels.
double high_frequency_energy(const RgbImage& image);
LatentQuality latent_quality(const RgbImage& variant, const RgbImage& reference);

struct DimensionRatings {
  std::string dimension;
  std::vector<double> scores;
};

std::vector<DimensionRatings> synthesize_ratings(const RgbImage& variant, const RgbImage& reference,
                                                 const SimulatedRatingConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corpus generation

struct CorpusConfig {
  int originals = 4;
  ImageSize size{256, 256};
  std::uint64_t seed = 0;
  SimulatedRatingConfig ratings;
  double min_severity = 0.3;
  double max_severity = 0.9;
};

inline constexpr std::string_view kGeneratorVersion = "dociq-synth 1.0.0";

/// Writes images/, masks/, manifest.jsonl and corpus_meta.json under `out`.
/// Originals cycle through the five distortion kinds. Returns the number of
/// manifest records.
std::size_t generate_corpus(const std::filesystem::path& out, const CorpusConfig& config);

}  // namespace dociq::corpus
