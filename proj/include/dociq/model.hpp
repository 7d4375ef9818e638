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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dociq/image.hpp"
#include "dociq/nn.hpp"

namespace dociq::model {

enum class BackboneKind {
  kTiny,   // 4 stages, channels 16/32/64/128, one basic residual block each
  kLarge,  // ResNet50 layout: bottleneck blocks 3/4/6/3, channels 256/512/1024/2048
};

struct ModelConfig {
  int height = 256;
  int width = 256;
  int mask_classes = kLayoutClassCount;
  int downsample_factor = 4;
  BackboneKind backbone = BackboneKind::kTiny;
  bool pretrained = false;
  /// Width C0 of the downsampler output; 0 selects the backbone's stem width.
  int stem_channels = 0;
  std::vector<std::string> dimensions = {"overall", "sharpness", "color_fidelity"};
  int raters = 15;
  double bottleneck_ratio = 0.25;
  /// Hidden width of the shared head layer; 0 selects 64 (tiny) / 512 (large).
  int head_hidden = 0;
  nn::Activation activation = nn::Activation::kSilu;
  // Ablation switches. Disabling the layout path leaves plain strided
  // downsampling of the image; disabling fusion pools the last stage
  // directly; disabling multi-rater gives each dimension a single output.
  bool layout_path = true;
  bool feature_fusion = true;
  bool multi_rater = true;
  std::uint64_t seed = 0;

  /// 256x256, tiny backbone.
  static ModelConfig desk();
  /// 1600x1600, ResNet50-class backbone.
  static ModelConfig full_scale();

  /// Throws Error(kConfiguration) on an illegal combination.
  void validate() const;

  int dimension_count() const { return static_cast<int>(dimensions.size()); }
  int outputs_per_head() const { return multi_rater ? raters : 1; }
  int backbone_stem_channels() const;
  int resolved_stem_channels() const { return stem_channels > 0 ? stem_channels : backbone_stem_channels(); }
  std::array<int, 4> stage_channels() const;
  int resolved_head_hidden() const;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// The four backbone stage outputs, earliest (highest resolution) first.
struct FeaturePyramid {
  std::array<nn::Tensor, 4> stages;
};

struct ScorePrediction {
  int dimensions = 0;
  int raters = 0;
  std::vector<double> per_rater;  // dimensions x raters, row-major
  std::vector<double> mos;

  double rater_score(int d, int r) const { return per_rater[static_cast<std::size_t>(d) * raters + r]; }
};

/// 8-bit RGB to a 3xHxW tensor in [0, 1].
nn::Tensor image_to_tensor(const RgbImage& image);

/// Activations recorded by a training forward pass; consumed by backward.
struct ChainCache {
  std::vector<nn::Tensor> inputs;
  std::vector<nn::Tensor> pre;
};

struct BlockCache {
  ChainCache branch;
  nn::Tensor input;
  nn::Tensor sum;
};

struct DownsamplerCache {
  ChainCache primary;
  ChainCache layout;
  nn::Tensor merged;
};

struct BackboneCache {
  nn::Tensor stem;
  nn::Tensor projected;
  std::vector<BlockCache> blocks;
};

struct FusionCache {
  std::array<ChainCache, 3> hyper;
  int final_height = 0;
  int final_width = 0;
};

struct HeadCache {
  nn::Tensor feature;
  nn::Tensor hidden_pre;
  nn::Tensor hidden;
};

struct ForwardCache {
  DownsamplerCache downsampler;
  BackboneCache backbone;
  FusionCache fusion;
  HeadCache head;
};

class DocIQModel;

namespace detail {

/// Convolutions applied in sequence, each followed by the activation except
/// possibly the last.
struct ConvChain {
  std::vector<nn::Conv2d> convs;
  bool activate_last = false;

  nn::Tensor forward(const nn::ParameterSet& params, nn::Activation act, const nn::Tensor& x,
                     ChainCache* cache) const;
  nn::Tensor backward(const nn::ParameterSet& params, nn::Activation act, const ChainCache& cache,
                      const nn::Tensor& grad, nn::Gradients& grads) const;
};

struct ResidualBlock {
  ConvChain branch;
  std::optional<nn::Conv2d> shortcut;
};

}  // namespace detail

/// Layout fusion downsampler -> residual backbone -> progressive feature
/// fusion -> parallel per-rater quality heads.
///
/// A constructed model is immutable during inference; all forward methods are
/// const and keep their intermediates in caller-owned caches, so concurrent
/// inference on one instance is safe. Training mutates parameters() and needs
/// exclusive access.
class DocIQModel {
 public:
  explicit DocIQModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  /// Re-draws all weights from config().seed (He-normal, zero biases).
  void initialize();

  /// image: 3xHxW in [0,1]. A null mask is treated as all background.
  nn::Tensor layout_fusion_downsample(const nn::Tensor& image, const LayoutMask* mask,
                                      DownsamplerCache* cache = nullptr) const;
  FeaturePyramid extract_pyramid(const nn::Tensor& stem, BackboneCache* cache = nullptr) const;
  nn::Tensor hyper_fuse(const FeaturePyramid& pyramid, FusionCache* cache = nullptr) const;
  ScorePrediction predict_scores(const nn::Tensor& feature, HeadCache* cache = nullptr) const;

  ScorePrediction forward(const nn::Tensor& image, const LayoutMask* mask, ForwardCache* cache = nullptr) const;
  ScorePrediction forward(const RgbImage& image, const LayoutMask* mask) const;

  // Backward passes accumulate parameter gradients and return the gradient
  // with respect to the component input.
  nn::Tensor predict_scores_backward(const HeadCache& cache, std::span<const double> grad_per_rater,
                                     std::span<const double> grad_mos, nn::Gradients& grads) const;
  FeaturePyramid hyper_fuse_backward(const FusionCache& cache, const nn::Tensor& grad_feature,
                                     nn::Gradients& grads) const;
  nn::Tensor extract_pyramid_backward(const BackboneCache& cache, const FeaturePyramid& grad_stages,
                                      nn::Gradients& grads) const;
  void layout_fusion_downsample_backward(const DownsamplerCache& cache, const nn::Tensor& grad_stem,
                                         nn::Gradients& grads) const;

  /// Full backward given dL/d per_rater and dL/d mos (mos is the row mean of
  /// per_rater, so its gradient is spread over the raters of each row).
  void backward(const ForwardCache& cache, std::span<const double> grad_per_rater,
                std::span<const double> grad_mos, nn::Gradients& grads) const;

 private:
  nn::Tensor encode_layout(const nn::Tensor& image, const LayoutMask* mask) const;

  ModelConfig config_;
  nn::ParameterSet params_;
  detail::ConvChain primary_;
  detail::ConvChain layout_;
  std::optional<nn::Conv2d> stem_projection_;
  std::vector<detail::ResidualBlock> blocks_;
  std::array<int, 4> stage_end_{};  // index one past the last block of each stage
  std::array<detail::ConvChain, 3> hyper_;
  nn::Linear shared_head_;
  std::vector<nn::Linear> heads_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Single-file checkpoint: magic, format version, embedded ModelConfig JSON,
/// then every parameter keyed by its hierarchical name.
void save_checkpoint(const std::filesystem::path& path, const DocIQModel& model);
DocIQModel load_checkpoint(const std::filesystem::path& path);

/// Copies every "backbone.*" parameter found in the checkpoint at `path` into
/// `model`. Throws Error(kConfiguration) on a missing or mis-shaped tensor.
void load_backbone_weights(DocIQModel& model, const std::filesystem::path& path);

/// Resolves $DOCIQ_CACHE/backbone_<tiny|large>.ckpt for pretrained configs.
std::filesystem::path pretrained_backbone_path(const ModelConfig& config);

}  // namespace dociq::model
