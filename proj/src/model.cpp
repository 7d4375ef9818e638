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

#include "dociq/model.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "dociq/error.hpp"

namespace dociq::model {

using nn::Tensor;

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.height = 1600;
  c.width = 1600;
  c.backbone = BackboneKind::kLarge;
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kConfiguration, m); };
  if (downsample_factor < 1 || !std::has_single_bit(static_cast<unsigned>(downsample_factor)))
    fail("downsample_factor must be a power of two");
  const int unit = downsample_factor * 32;
  if (height <= 0 || width <= 0 || height % unit != 0 || width % unit != 0)
    fail("input size " + std::to_string(height) + "x" + std::to_string(width) + " must be divisible by " +
         std::to_string(unit));
  if (dimensions.empty()) fail("at least one rating dimension is required");
  if (raters < 1) fail("raters must be >= 1");
  if (mask_classes < 1) fail("mask_classes must be >= 1");
  if (!(bottleneck_ratio > 0.0 && bottleneck_ratio <= 1.0)) fail("bottleneck_ratio must be in (0, 1]");
  if (stem_channels < 0 || head_hidden < 0) fail("channel widths must be non-negative");
}

int ModelConfig::backbone_stem_channels() const { return backbone == BackboneKind::kTiny ? 16 : 64; }

std::array<int, 4> ModelConfig::stage_channels() const {
  if (backbone == BackboneKind::kTiny) return {16, 32, 64, 128};
  return {256, 512, 1024, 2048};
}

int ModelConfig::resolved_head_hidden() const {
  if (head_hidden > 0) return head_hidden;
  return backbone == BackboneKind::kTiny ? 64 : 512;
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["height"] = c.height;
  j["width"] = c.width;
  j["mask_classes"] = c.mask_classes;
  j["downsample_factor"] = c.downsample_factor;
  j["backbone"] = c.backbone == BackboneKind::kTiny ? "tiny" : "large";
  j["pretrained"] = c.pretrained;
  j["stem_channels"] = c.stem_channels;
  j["dimensions"] = c.dimensions;
  j["raters"] = c.raters;
  j["bottleneck_ratio"] = c.bottleneck_ratio;
  j["head_hidden"] = c.head_hidden;
  j["activation"] = c.activation == nn::Activation::kSilu ? "silu" : "relu";
  j["layout_path"] = c.layout_path;
  j["feature_fusion"] = c.feature_fusion;
  j["multi_rater"] = c.multi_rater;
  j["seed"] = c.seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.mask_classes = j.value("mask_classes", c.mask_classes);
    c.downsample_factor = j.value("downsample_factor", c.downsample_factor);
    const std::string backbone = j.value("backbone", std::string("tiny"));
    if (backbone == "tiny") {
      c.backbone = BackboneKind::kTiny;
    } else if (backbone == "large") {
      c.backbone = BackboneKind::kLarge;
    } else {
      throw Error(ErrorKind::kConfiguration, "unknown backbone '" + backbone + "'");
    }
    c.pretrained = j.value("pretrained", c.pretrained);
    c.stem_channels = j.value("stem_channels", c.stem_channels);
    c.dimensions = j.value("dimensions", c.dimensions);
    c.raters = j.value("raters", c.raters);
    c.bottleneck_ratio = j.value("bottleneck_ratio", c.bottleneck_ratio);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    const std::string act = j.value("activation", std::string("silu"));
    if (act == "silu") {
      c.activation = nn::Activation::kSilu;
    } else if (act == "relu") {
      c.activation = nn::Activation::kRelu;
    } else {
      throw Error(ErrorKind::kConfiguration, "unknown activation '" + act + "'");
    }
    c.layout_path = j.value("layout_path", c.layout_path);
    c.feature_fusion = j.value("feature_fusion", c.feature_fusion);
    c.multi_rater = j.value("multi_rater", c.multi_rater);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfiguration, std::string("malformed model config: ") + e.what());
  }
  return c;
}

Tensor image_to_tensor(const RgbImage& image) {
  Tensor t(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = image.at(y, x, c) / 255.0;
  return t;
}

namespace detail {

Tensor ConvChain::forward(const nn::ParameterSet& params, nn::Activation act, const Tensor& x,
                          ChainCache* cache) const {
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    Tensor y = convs[i].forward(params, cur);
    const bool activated = i + 1 < convs.size() || activate_last;
    if (cache) {
      cache->inputs.push_back(std::move(cur));
      cache->pre.push_back(activated ? y : Tensor{});
    }
    cur = activated ? nn::activate(act, y) : std::move(y);
  }
  return cur;
}

Tensor ConvChain::backward(const nn::ParameterSet& params, nn::Activation act, const ChainCache& cache,
                           const Tensor& grad, nn::Gradients& grads) const {
  Tensor g = grad;
  for (std::size_t i = convs.size(); i-- > 0;) {
    const bool activated = i + 1 < convs.size() || activate_last;
    if (activated) g = nn::activate_backward(act, cache.pre[i], g);
    g = convs[i].backward(params, cache.inputs[i], g, grads);
  }
  return g;
}

}  // namespace detail

namespace {

Tensor add(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

void require_shape(const Tensor& t, int c, int h, int w, const std::string& what) {
  if (t.channels() != c || t.height() != h || t.width() != w) {
    throw Error(ErrorKind::kInvalidArgument, what + " has shape " + std::to_string(t.channels()) + "x" +
                                                 std::to_string(t.height()) + "x" + std::to_string(t.width()) +
                                                 ", expected " + std::to_string(c) + "x" + std::to_string(h) +
                                                 "x" + std::to_string(w));
  }
}

int half_up(int n) { return (n + 1) / 2; }

}  // namespace

DocIQModel::DocIQModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const int c0 = config_.resolved_stem_channels();
  const int steps = config_.downsample_factor == 1 ? 1 : std::countr_zero(unsigned(config_.downsample_factor));
  const int stride = config_.downsample_factor == 1 ? 1 : 2;
  for (int i = 0; i < steps; ++i) {
    primary_.convs.emplace_back(params_, "downsampler.primary.conv" + std::to_string(i), i == 0 ? 3 : c0, c0, 3,
                                stride, 1);
  }
  if (config_.layout_path) {
    for (int i = 0; i < steps; ++i) {
      layout_.convs.emplace_back(params_, "downsampler.layout.conv" + std::to_string(i),
                                 i == 0 ? 3 + config_.mask_classes : c0, c0, 3, stride, 1);
    }
  }
  const int stem = config_.backbone_stem_channels();
  if (c0 != stem) stem_projection_.emplace(params_, "stem_projection", c0, stem, 1, 1, 0);

  const auto ch = config_.stage_channels();
  int in = stem;
  for (int s = 0; s < 4; ++s) {
    const std::string stage = "backbone.stage" + std::to_string(s + 1);
    if (config_.backbone == BackboneKind::kTiny) {
      const int out = ch[static_cast<std::size_t>(s)];
      const int st = s == 0 ? 1 : 2;
      detail::ResidualBlock block;
      const std::string name = stage + ".block0";
      block.branch.convs.emplace_back(params_, name + ".conv1", in, out, 3, st, 1);
      block.branch.convs.emplace_back(params_, name + ".conv2", out, out, 3, 1, 1);
      if (in != out || st != 1) block.shortcut.emplace(params_, name + ".shortcut", in, out, 1, st, 0);
      blocks_.push_back(std::move(block));
      in = out;
    } else {
      constexpr std::array<int, 4> kDepth = {3, 4, 6, 3};
      const int mid = ch[static_cast<std::size_t>(s)] / 4;
      const int out = ch[static_cast<std::size_t>(s)];
      for (int b = 0; b < kDepth[static_cast<std::size_t>(s)]; ++b) {
        const int st = (b == 0 && s > 0) ? 2 : 1;
        detail::ResidualBlock block;
        const std::string name = stage + ".block" + std::to_string(b);
        block.branch.convs.emplace_back(params_, name + ".conv1", in, mid, 1, 1, 0);
        block.branch.convs.emplace_back(params_, name + ".conv2", mid, mid, 3, st, 1);
        block.branch.convs.emplace_back(params_, name + ".conv3", mid, out, 1, 1, 0);
        if (b == 0) block.shortcut.emplace(params_, name + ".shortcut", in, out, 1, st, 0);
        blocks_.push_back(std::move(block));
        in = out;
      }
    }
    stage_end_[static_cast<std::size_t>(s)] = static_cast<int>(blocks_.size());
  }

  if (config_.feature_fusion) {
    for (int i = 0; i < 3; ++i) {
      const int cin = ch[static_cast<std::size_t>(i)];
      const int cout = ch[static_cast<std::size_t>(i) + 1];
      const int mid = std::max(1, static_cast<int>(std::lround(cin * config_.bottleneck_ratio)));
      const std::string name = "fusion.hyper" + std::to_string(i + 2);
      auto& chain = hyper_[static_cast<std::size_t>(i)];
      chain.activate_last = true;
      chain.convs.emplace_back(params_, name + ".compress", cin, mid, 1, 1, 0);
      chain.convs.emplace_back(params_, name + ".spatial", mid, mid, 3, 2, 1);
      chain.convs.emplace_back(params_, name + ".restore", mid, cout, 1, 1, 0);
    }
  }

  const int hidden = config_.resolved_head_hidden();
  shared_head_ = nn::Linear(params_, "head.shared", ch[3], hidden);
  for (int d = 0; d < config_.dimension_count(); ++d) {
    heads_.emplace_back(params_, "head.dim" + std::to_string(d), hidden, config_.outputs_per_head());
  }
  initialize();
}

void DocIQModel::initialize() {
  // Each layer draws from its own stream keyed by its weight name.
  auto stream = [&](int weight_id) {
    return Rng(derive_seed(config_.seed, "model.init." + params_[weight_id].name));
  };
  auto init_conv = [&](const nn::Conv2d& c, double gain) {
    Rng rng = stream(c.weight_id());
    c.initialize(params_, rng, gain);
  };
  for (const auto& c : primary_.convs) init_conv(c, 1.0);
  for (const auto& c : layout_.convs) init_conv(c, 1.0);
  if (stem_projection_) init_conv(*stem_projection_, 1.0);
  for (const auto& block : blocks_) {
    for (std::size_t i = 0; i < block.branch.convs.size(); ++i) {
      init_conv(block.branch.convs[i], i + 1 == block.branch.convs.size() ? 0.5 : 1.0);
    }
    if (block.shortcut) init_conv(*block.shortcut, 1.0);
  }
  for (const auto& chain : hyper_) {
    for (std::size_t i = 0; i < chain.convs.size(); ++i) {
      init_conv(chain.convs[i], i + 1 == chain.convs.size() ? 0.5 : 1.0);
    }
  }
  Rng shared = stream(shared_head_.weight_id());
  shared_head_.initialize(params_, shared);
  for (const auto& h : heads_) {
    Rng rng = stream(h.weight_id());
    h.initialize(params_, rng, 0.5);
  }
}

Tensor DocIQModel::encode_layout(const Tensor& image, const LayoutMask* mask) const {
  const int k = config_.mask_classes;
  Tensor x(3 + k, image.height(), image.width());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height(); ++y)
      for (int xx = 0; xx < image.width(); ++xx) x.at(c, y, xx) = image.at(c, y, xx);
  for (int y = 0; y < image.height(); ++y) {
    for (int xx = 0; xx < image.width(); ++xx) {
      const int cls = mask ? mask->at(y, xx) : static_cast<int>(LayoutClass::kBackground);
      if (cls >= k) {
        throw Error(ErrorKind::kInvalidArgument,
                    "mask class " + std::to_string(cls) + " exceeds mask_classes " + std::to_string(k));
      }
      x.at(3 + cls, y, xx) = 1.0;
    }
  }
  return x;
}

Tensor DocIQModel::layout_fusion_downsample(const Tensor& image, const LayoutMask* mask,
                                            DownsamplerCache* cache) const {
  if (image.channels() != 3) throw Error(ErrorKind::kInvalidArgument, "image must have 3 channels");
  if (mask && (mask->height() != image.height() || mask->width() != image.width())) {
    throw Error(ErrorKind::kInvalidArgument, "mask " + std::to_string(mask->height()) + "x" +
                                                 std::to_string(mask->width()) + " is not aligned with image " +
                                                 std::to_string(image.height()) + "x" +
                                                 std::to_string(image.width()));
  }
  const auto act = config_.activation;
  Tensor merged = primary_.forward(params_, act, image, cache ? &cache->primary : nullptr);
  if (config_.layout_path) {
    merged += layout_.forward(params_, act, encode_layout(image, mask), cache ? &cache->layout : nullptr);
  }
  Tensor stem = nn::activate(act, merged);
  if (cache) cache->merged = std::move(merged);
  return stem;
}

void DocIQModel::layout_fusion_downsample_backward(const DownsamplerCache& cache, const Tensor& grad_stem,
                                                   nn::Gradients& grads) const {
  const Tensor g = nn::activate_backward(config_.activation, cache.merged, grad_stem);
  primary_.backward(params_, config_.activation, cache.primary, g, grads);
  if (config_.layout_path) layout_.backward(params_, config_.activation, cache.layout, g, grads);
}

FeaturePyramid DocIQModel::extract_pyramid(const Tensor& stem, BackboneCache* cache) const {
  const int c0 = config_.resolved_stem_channels();
  if (stem.channels() != c0) {
    throw Error(ErrorKind::kConfiguration, "stem features have " + std::to_string(stem.channels()) +
                                               " channels, backbone expects " + std::to_string(c0));
  }
  const auto act = config_.activation;
  Tensor x = stem_projection_ ? stem_projection_->forward(params_, stem) : stem;
  if (cache) {
    cache->stem = stem;
    cache->blocks.assign(blocks_.size(), BlockCache{});
  }
  FeaturePyramid pyramid;
  int stage = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& block = blocks_[b];
    BlockCache* bc = cache ? &cache->blocks[b] : nullptr;
    Tensor skip = block.shortcut ? block.shortcut->forward(params_, x) : x;
    Tensor sum = add(block.branch.forward(params_, act, x, bc ? &bc->branch : nullptr), skip);
    Tensor y = nn::activate(act, sum);
    if (bc) {
      bc->input = std::move(x);
      bc->sum = std::move(sum);
    }
    x = std::move(y);
    if (static_cast<int>(b) + 1 == stage_end_[static_cast<std::size_t>(stage)]) {
      pyramid.stages[static_cast<std::size_t>(stage)] = x;
      ++stage;
    }
  }
  return pyramid;
}

Tensor DocIQModel::extract_pyramid_backward(const BackboneCache& cache, const FeaturePyramid& grad_stages,
                                            nn::Gradients& grads) const {
  const auto act = config_.activation;
  Tensor g;
  int stage = 3;
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    if (stage >= 0 && static_cast<int>(b) + 1 == stage_end_[static_cast<std::size_t>(stage)]) {
      const Tensor& gs = grad_stages.stages[static_cast<std::size_t>(stage)];
      if (gs.size() != 0) {
        if (g.size() == 0) {
          g = gs;
        } else {
          g += gs;
        }
      }
      --stage;
    }
    const auto& block = blocks_[b];
    const BlockCache& bc = cache.blocks[b];
    if (g.size() == 0) g = Tensor(bc.sum.channels(), bc.sum.height(), bc.sum.width());
    const Tensor g_sum = nn::activate_backward(act, bc.sum, g);
    Tensor gx = block.branch.backward(params_, act, bc.branch, g_sum, grads);
    if (block.shortcut) {
      gx += block.shortcut->backward(params_, bc.input, g_sum, grads);
    } else {
      gx += g_sum;
    }
    g = std::move(gx);
  }
  if (stem_projection_) g = stem_projection_->backward(params_, cache.stem, g, grads);
  return g;
}

Tensor DocIQModel::hyper_fuse(const FeaturePyramid& pyramid, FusionCache* cache) const {
  const auto ch = config_.stage_channels();
  const Tensor& first = pyramid.stages[0];
  require_shape(first, ch[0], first.height(), first.width(), "pyramid stage 1");
  int h = first.height();
  int w = first.width();
  for (std::size_t i = 1; i < 4; ++i) {
    h = half_up(h);
    w = half_up(w);
    require_shape(pyramid.stages[i], ch[i], h, w, "pyramid stage " + std::to_string(i + 1));
  }
  if (cache) {
    cache->final_height = h;
    cache->final_width = w;
  }
  if (!config_.feature_fusion) return nn::global_average_pool(pyramid.stages[3]);
  Tensor g = first;
  for (std::size_t i = 0; i < 3; ++i) {
    g = add(hyper_[i].forward(params_, config_.activation, g, cache ? &cache->hyper[i] : nullptr),
            pyramid.stages[i + 1]);
  }
  return nn::global_average_pool(g);
}

FeaturePyramid DocIQModel::hyper_fuse_backward(const FusionCache& cache, const Tensor& grad_feature,
                                               nn::Gradients& grads) const {
  FeaturePyramid out;
  Tensor g = nn::global_average_pool_backward(grad_feature, cache.final_height, cache.final_width);
  out.stages[3] = g;
  if (!config_.feature_fusion) return out;
  for (std::size_t i = 3; i-- > 0;) {
    g = hyper_[i].backward(params_, config_.activation, cache.hyper[i], g, grads);
    out.stages[i] = g;
  }
  return out;
}

ScorePrediction DocIQModel::predict_scores(const Tensor& feature, HeadCache* cache) const {
  const int c_final = config_.stage_channels()[3];
  if (static_cast<int>(feature.size()) != c_final) {
    throw Error(ErrorKind::kInvalidArgument, "global feature has length " + std::to_string(feature.size()) +
                                                 ", expected " + std::to_string(c_final));
  }
  Tensor pre = shared_head_.forward(params_, feature);
  Tensor hidden = nn::activate(config_.activation, pre);
  ScorePrediction out;
  out.dimensions = config_.dimension_count();
  out.raters = config_.outputs_per_head();
  out.per_rater.reserve(static_cast<std::size_t>(out.dimensions) * out.raters);
  for (const auto& head : heads_) {
    const Tensor y = head.forward(params_, hidden);
    double sum = 0.0;
    for (double v : y.values()) {
      out.per_rater.push_back(v);
      sum += v;
    }
    out.mos.push_back(sum / out.raters);
  }
  if (cache) {
    cache->feature = feature;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Tensor DocIQModel::predict_scores_backward(const HeadCache& cache, std::span<const double> grad_per_rater,
                                           std::span<const double> grad_mos, nn::Gradients& grads) const {
  const int r = config_.outputs_per_head();
  Tensor g_hidden = Tensor::vector(static_cast<int>(cache.hidden.size()));
  for (std::size_t d = 0; d < heads_.size(); ++d) {
    Tensor gy = Tensor::vector(r);
    for (int k = 0; k < r; ++k) {
      double v = grad_mos.empty() ? 0.0 : grad_mos[d] / r;
      if (!grad_per_rater.empty()) v += grad_per_rater[d * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)];
      gy[static_cast<std::size_t>(k)] = v;
    }
    g_hidden += heads_[d].backward(params_, cache.hidden, gy, grads);
  }
  const Tensor g_pre = nn::activate_backward(config_.activation, cache.hidden_pre, g_hidden);
  return shared_head_.backward(params_, cache.feature, g_pre, grads);
}

ScorePrediction DocIQModel::forward(const Tensor& image, const LayoutMask* mask, ForwardCache* cache) const {
  const Tensor stem = layout_fusion_downsample(image, mask, cache ? &cache->downsampler : nullptr);
  const FeaturePyramid pyramid = extract_pyramid(stem, cache ? &cache->backbone : nullptr);
  const Tensor feature = hyper_fuse(pyramid, cache ? &cache->fusion : nullptr);
  return predict_scores(feature, cache ? &cache->head : nullptr);
}

ScorePrediction DocIQModel::forward(const RgbImage& image, const LayoutMask* mask) const {
  return forward(image_to_tensor(image), mask);
}

void DocIQModel::backward(const ForwardCache& cache, std::span<const double> grad_per_rater,
                          std::span<const double> grad_mos, nn::Gradients& grads) const {
  const Tensor g_feature = predict_scores_backward(cache.head, grad_per_rater, grad_mos, grads);
  const FeaturePyramid g_stages = hyper_fuse_backward(cache.fusion, g_feature, grads);
  const Tensor g_stem = extract_pyramid_backward(cache.backbone, g_stages, grads);
  layout_fusion_downsample_backward(cache.downsampler, g_stem, grads);
}

namespace {

constexpr char kMagic[8] = {'D', 'O', 'C', 'I', 'Q', 'C', 'K', '\0'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorKind::kIo, "truncated checkpoint " + path.string());
  }
  return v;
}

std::string get_string(std::istream& is, std::uint64_t n, const std::filesystem::path& path) {
  if (n > (1u << 30)) throw Error(ErrorKind::kIo, "corrupt checkpoint " + path.string());
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw Error(ErrorKind::kIo, "truncated checkpoint " + path.string());
  }
  return s;
}

struct RawParameter {
  std::vector<int> shape;
  std::vector<double> value;
};

std::pair<nlohmann::json, std::vector<std::pair<std::string, RawParameter>>> read_raw(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorKind::kIo, path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kIo, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto config_len = get<std::uint64_t>(is, path);
  nlohmann::json config = nlohmann::json::parse(get_string(is, config_len, path));
  const auto count = get<std::uint64_t>(is, path);
  std::vector<std::pair<std::string, RawParameter>> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(is, path);
    std::string name = get_string(is, name_len, path);
    RawParameter p;
    const auto rank = get<std::uint32_t>(is, path);
    for (std::uint32_t r = 0; r < rank; ++r) p.shape.push_back(get<std::int32_t>(is, path));
    const auto n = get<std::uint64_t>(is, path);
    p.value.resize(n);
    if (!is.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
      throw Error(ErrorKind::kIo, "truncated checkpoint " + path.string());
    }
    out.emplace_back(std::move(name), std::move(p));
  }
  return {std::move(config), std::move(out)};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DocIQModel& model) {
  static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kCheckpointVersion);
  const std::string config = to_json(model.config()).dump();
  put<std::uint64_t>(os, config.size());
  os.write(config.data(), static_cast<std::streamsize>(config.size()));
  const auto& params = model.parameters();
  put<std::uint64_t>(os, static_cast<std::uint64_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) put<std::int32_t>(os, d);
    put<std::uint64_t>(os, p.value.size());
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!os) throw Error(ErrorKind::kIo, "failed writing checkpoint " + path.string());
}

DocIQModel load_checkpoint(const std::filesystem::path& path) {
  auto [config, raw] = read_raw(path);
  DocIQModel model(model_config_from_json(config));
  auto& params = model.parameters();
  if (static_cast<int>(raw.size()) != params.size()) {
    throw Error(ErrorKind::kConfiguration, "checkpoint has " + std::to_string(raw.size()) +
                                               " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto& [name, p] : raw) {
    const int id = params.find(name);
    if (id < 0) throw Error(ErrorKind::kConfiguration, "unexpected tensor " + name + " in checkpoint");
    if (params[id].shape != p.shape) throw Error(ErrorKind::kConfiguration, "shape mismatch for " + name);
    params[id].value = std::move(p.value);
  }
  return model;
}

void load_backbone_weights(DocIQModel& model, const std::filesystem::path& path) {
  auto [config, raw] = read_raw(path);
  auto& params = model.parameters();
  int copied = 0;
  for (auto& [name, p] : raw) {
    if (name.rfind("backbone.", 0) != 0) continue;
    const int id = params.find(name);
    if (id < 0 || params[id].shape != p.shape) {
      throw Error(ErrorKind::kConfiguration, "pretrained tensor " + name + " does not fit this backbone");
    }
    params[id].value = std::move(p.value);
    ++copied;
  }
  for (const auto& p : params) {
    if (p.name.rfind("backbone.", 0) == 0) --copied;
  }
  if (copied != 0) throw Error(ErrorKind::kConfiguration, "pretrained weights do not cover the backbone");
}

std::filesystem::path pretrained_backbone_path(const ModelConfig& config) {
  const char* cache = std::getenv("DOCIQ_CACHE");
  std::filesystem::path dir = cache && *cache ? std::filesystem::path(cache) : std::filesystem::path(".dociq_cache");
  return dir / (config.backbone == BackboneKind::kTiny ? "backbone_tiny.ckpt" : "backbone_large.ckpt");
}

}  // namespace dociq::model
