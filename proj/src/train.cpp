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

#include "dociq/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dociq/error.hpp"
#include "dociq/metrics.hpp"
#include "dociq/random.hpp"

namespace dociq::train {

std::string Ablations::label() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(no_layout, "no_layout");
  add(no_fusion, "no_fusion");
  add(no_multirater, "no_multirater");
  return out.empty() ? "full" : out;
}

Ablations Ablations::parse(std::string_view list) {
  Ablations a;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t end = std::min(list.find(',', pos), list.size());
    std::string item(list.substr(pos, end - pos));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item == "no_layout") {
      a.no_layout = true;
    } else if (item == "no_fusion") {
      a.no_fusion = true;
    } else if (item == "no_multirater") {
      a.no_multirater = true;
    } else if (!item.empty() && item != "full") {
      throw Error(ErrorKind::kConfiguration, "unknown ablation '" + item + "'");
    }
    pos = end + 1;
  }
  return a;
}

std::vector<Ablations> ablation_table() {
  return {
      {false, false, false},
      {false, false, true},
      {false, true, false},
      {true, false, false},
      {true, true, true},
  };
}

void apply_ablations(model::ModelConfig& config, const Ablations& a) {
  if (a.no_layout) config.layout_path = false;
  if (a.no_fusion) config.feature_fusion = false;
  if (a.no_multirater) config.multi_rater = false;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kConfiguration, m); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be > 0");
  if (!(decay > 0.0 && decay < 1.0)) fail("decay must lie in (0, 1)");
  if (step_size < 1) fail("step_size must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch < 1) fail("batch must be >= 1");
  if (loss_weights.rater < 0.0 || loss_weights.mos < 0.0) fail("loss weights must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation_fraction must lie in [0, 1)");
  if (max_steps < 0) fail("max_steps must be >= 0");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["lr"] = c.lr;
  j["step_size"] = c.step_size;
  j["decay"] = c.decay;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["w_rater"] = c.loss_weights.rater;
  j["w_mos"] = c.loss_weights.mos;
  j["no_layout"] = c.ablations.no_layout;
  j["no_fusion"] = c.ablations.no_fusion;
  j["no_multirater"] = c.ablations.no_multirater;
  j["order_invariant"] = c.order_invariant;
  j["augment"] = c.augment;
  j["mean_bias_init"] = c.mean_bias_init;
  j["validation_fraction"] = c.validation_fraction;
  j["max_steps"] = c.max_steps;
  j["seed"] = c.seed;
  return j;
}

namespace {

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.step_size = j.value("step_size", c.step_size);
  c.decay = j.value("decay", c.decay);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.loss_weights.rater = j.value("w_rater", c.loss_weights.rater);
  c.loss_weights.mos = j.value("w_mos", c.loss_weights.mos);
  c.ablations.no_layout = j.value("no_layout", c.ablations.no_layout);
  c.ablations.no_fusion = j.value("no_fusion", c.ablations.no_fusion);
  c.ablations.no_multirater = j.value("no_multirater", c.ablations.no_multirater);
  c.order_invariant = j.value("order_invariant", c.order_invariant);
  c.augment = j.value("augment", c.augment);
  c.mean_bias_init = j.value("mean_bias_init", c.mean_bias_init);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

double lr_schedule(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw Error(ErrorKind::kInvalidArgument, "epoch must be >= 0");
  return config.lr * std::pow(config.decay, epoch / config.step_size);
}

// ---------------------------------------------------------------------------
// Targets and loss

void RaterTargets::validate() const {
  const auto n = static_cast<std::size_t>(dimensions) * static_cast<std::size_t>(raters);
  if (dimensions < 1 || raters < 1 || scores.size() != n || present.size() != n ||
      mos.size() != static_cast<std::size_t>(dimensions)) {
    throw Error(ErrorKind::kInvalidTarget, "target arrays do not match " + std::to_string(dimensions) + " x " +
                                               std::to_string(raters));
  }
  for (int d = 0; d < dimensions; ++d) {
    bool any = false;
    for (int r = 0; r < raters; ++r) any = any || is_present(d, r);
    if (!any) throw Error(ErrorKind::kInvalidTarget, "dimension " + std::to_string(d) + " has no present raters");
  }
}

RaterTargets targets_from_sample(const ingest::DocumentSample& sample, const std::vector<std::string>& dimensions,
                                 int raters) {
  RaterTargets t;
  t.dimensions = static_cast<int>(dimensions.size());
  t.raters = raters;
  t.scores.assign(static_cast<std::size_t>(t.dimensions) * raters, 0.0);
  t.present.assign(t.scores.size(), 0);
  for (int d = 0; d < t.dimensions; ++d) {
    const auto* ds = sample.find(dimensions[static_cast<std::size_t>(d)]);
    if (ds == nullptr) {
      throw Error(ErrorKind::kInvalidTarget,
                  "sample " + sample.image + " lacks dimension '" + dimensions[static_cast<std::size_t>(d)] + "'");
    }
    if (static_cast<int>(ds->scores.size()) != raters) {
      throw Error(ErrorKind::kInvalidTarget, "sample " + sample.image + " has " + std::to_string(ds->scores.size()) +
                                                 " raters for '" + ds->dimension + "', model expects " +
                                                 std::to_string(raters));
    }
    for (int r = 0; r < raters; ++r) {
      const auto& s = ds->scores[static_cast<std::size_t>(r)];
      if (s) {
        t.scores[static_cast<std::size_t>(d) * raters + r] = *s;
        t.present[static_cast<std::size_t>(d) * raters + r] = 1;
      }
    }
    t.mos.push_back(ds->mos);
  }
  t.validate();
  return t;
}

namespace {

// Pairs (prediction index, target value) for one dimension in the
// order-invariant loss: sorted predictions against sorted present targets,
// with quantile matching when fewer targets than outputs are present.
std::vector<std::pair<int, double>> sorted_matching(const model::ScorePrediction& pred, const RaterTargets& t, int d) {
  std::vector<int> order(static_cast<std::size_t>(pred.raters));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pred.rater_score(d, a) < pred.rater_score(d, b); });
  std::vector<double> targets;
  for (int r = 0; r < t.raters; ++r)
    if (t.is_present(d, r)) targets.push_back(t.score(d, r));
  std::sort(targets.begin(), targets.end());
  std::vector<std::pair<int, double>> out;
  const auto m = targets.size();
  const auto n = order.size();
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t k = j;
    if (m != n) {
      k = m == 1 ? (n - 1) / 2 : static_cast<std::size_t>(std::lround(static_cast<double>(j) * (n - 1) / (m - 1)));
    }
    out.emplace_back(order[k], targets[j]);
  }
  return out;
}

}  // namespace

LossResult multi_rater_loss(const model::ScorePrediction& pred, const RaterTargets& target, const LossOptions& options) {
  target.validate();
  if (pred.dimensions != target.dimensions || pred.mos.size() != static_cast<std::size_t>(target.dimensions)) {
    throw Error(ErrorKind::kInvalidTarget, "prediction has " + std::to_string(pred.dimensions) +
                                               " dimensions, target has " + std::to_string(target.dimensions));
  }
  if (!options.mos_only && pred.raters != target.raters) {
    throw Error(ErrorKind::kInvalidTarget, "prediction has " + std::to_string(pred.raters) +
                                               " raters per head, target has " + std::to_string(target.raters));
  }
  LossResult res;
  res.grad_per_rater.assign(pred.per_rater.size(), 0.0);
  res.grad_mos.assign(pred.mos.size(), 0.0);
  const int D = target.dimensions;

  if (!options.mos_only && options.weights.rater != 0.0) {
    std::vector<std::pair<std::size_t, double>> pairs;  // flat prediction index, target
    for (int d = 0; d < D; ++d) {
      if (options.order_invariant) {
        for (const auto& [r, v] : sorted_matching(pred, target, d))
          pairs.emplace_back(static_cast<std::size_t>(d) * pred.raters + r, v);
      } else {
        for (int r = 0; r < target.raters; ++r)
          if (target.is_present(d, r)) pairs.emplace_back(static_cast<std::size_t>(d) * pred.raters + r, target.score(d, r));
      }
    }
    const auto n = static_cast<double>(pairs.size());
    for (const auto& [i, v] : pairs) {
      const double diff = pred.per_rater[i] - v;
      res.rater_term += diff * diff / n;
      res.grad_per_rater[i] += options.weights.rater * 2.0 * diff / n;
    }
  }
  for (int d = 0; d < D; ++d) {
    const auto k = static_cast<std::size_t>(d);
    const double diff = pred.mos[k] - target.mos[k];
    res.mos_term += diff * diff / D;
    res.grad_mos[k] = options.weights.mos * 2.0 * diff / D;
  }
  const double w_rater = options.mos_only ? 0.0 : options.weights.rater;
  res.value = w_rater * res.rater_term + options.weights.mos * res.mos_term;
  return res;
}

LossOptions loss_options(const TrainConfig& config) {
  LossOptions o;
  o.weights = config.loss_weights;
  o.mos_only = config.ablations.no_multirater;
  o.order_invariant = config.order_invariant;
  return o;
}

// ---------------------------------------------------------------------------
// Data

std::vector<PreparedSample> prepare_samples(const std::vector<ingest::DocumentSample>& samples,
                                            const model::ModelConfig& config) {
  const ImageSize size{config.height, config.width};
  std::vector<PreparedSample> out(samples.size());
  std::vector<std::string> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      const auto& s = samples[i];
      RgbImage img = read_png_rgb(s.image_path());
      if (img.size() != size) img = resize_bilinear(img, size);
      out[i].image = model::image_to_tensor(img);
      if (auto mp = s.mask_path()) {
        GrayImage m = read_png_gray(*mp);
        if (m.size() != size) m = resize_nearest(m, size);
        out[i].mask = std::move(m);
      }
      out[i].targets = targets_from_sample(s, config.dimensions, config.raters);
      out[i].origin_id = s.origin_id;
      out[i].image_ref = s.image;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(ErrorKind::kIo, "sample " + samples[i].image + ": " + errors[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

Adam::Adam(const nn::ParameterSet& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void Adam::step(nn::ParameterSet& params, const nn::Gradients& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (int id = 0; id < params.size(); ++id) {
    auto& value = params[id].value;
    const auto g = grads[id];
    auto& m = m_[static_cast<std::size_t>(id)];
    auto& v = v_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["dimensions"] = nlohmann::ordered_json::array();
  for (const auto& d : r.dimensions) {
    nlohmann::ordered_json e;
    e["dimension"] = d.dimension;
    e["plcc"] = d.plcc;
    e["srcc"] = d.srcc;
    if (d.plcc_logistic) e["plcc_logistic"] = *d.plcc_logistic;
    j["dimensions"].push_back(std::move(e));
  }
  j["average"] = {{"plcc", r.average_plcc}, {"srcc", r.average_srcc}};
  return j;
}

EvaluationReport evaluate_predictions(const std::vector<std::string>& dimensions,
                                      const std::vector<std::vector<double>>& predicted,
                                      const std::vector<std::vector<double>>& ground_truth, bool logistic) {
  if (dimensions.empty() || predicted.size() != dimensions.size() || ground_truth.size() != dimensions.size()) {
    throw Error(ErrorKind::kInvalidArgument, "evaluation needs one prediction and ground-truth list per dimension");
  }
  EvaluationReport report;
  report.samples = predicted.front().size();
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    DimensionMetrics m;
    m.dimension = dimensions[d];
    try {
      m.plcc = metrics::plcc(predicted[d], ground_truth[d]);
      m.srcc = metrics::srcc(predicted[d], ground_truth[d]);
      if (logistic) m.plcc_logistic = metrics::plcc_logistic(predicted[d], ground_truth[d]);
    } catch (const Error& e) {
      const std::string what = e.what();
      const auto prefix = std::string(to_string(e.kind())) + ": ";
      throw Error(e.kind(), "dimension '" + dimensions[d] + "' over " + std::to_string(predicted[d].size()) +
                                " samples: " + what.substr(what.rfind(prefix, 0) == 0 ? prefix.size() : 0));
    }
    report.average_plcc += m.plcc / static_cast<double>(dimensions.size());
    report.average_srcc += m.srcc / static_cast<double>(dimensions.size());
    report.dimensions.push_back(std::move(m));
  }
  return report;
}

std::vector<std::vector<double>> predict_mos(const model::DocIQModel& model, std::span<const PreparedSample> samples) {
  const auto D = static_cast<std::size_t>(model.config().dimension_count());
  std::vector<std::vector<double>> out(D, std::vector<double>(samples.size()));
  std::vector<std::string> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      const auto& s = samples[i];
      const auto pred = model.forward(s.image, s.mask ? &*s.mask : nullptr);
      for (std::size_t d = 0; d < D; ++d) out[d][i] = pred.mos[d];
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::kInvalidArgument, "prediction failed: " + e);
  return out;
}

EvaluationReport evaluate(const model::DocIQModel& model, std::span<const PreparedSample> samples, bool logistic) {
  if (samples.empty()) throw Error(ErrorKind::kNoData, "evaluation set is empty");
  const auto predicted = predict_mos(model, samples);
  std::vector<std::vector<double>> truth(predicted.size(), std::vector<double>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t d = 0; d < truth.size(); ++d) truth[d][i] = samples[i].targets.mos[d];
  return evaluate_predictions(model.config().dimensions, predicted, truth, logistic);
}

double dataset_loss(const model::DocIQModel& model, std::span<const PreparedSample> samples, const TrainConfig& config) {
  if (samples.empty()) throw Error(ErrorKind::kNoData, "loss over an empty set");
  const LossOptions options = loss_options(config);
  double total = 0.0;
  for (const auto& s : samples) {
    const auto pred = model.forward(s.image, s.mask ? &*s.mask : nullptr);
    total += multi_rater_loss(pred, s.targets, options).value;
  }
  return total / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Training loop

nlohmann::ordered_json to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["steps"] = r.steps;
  j["mean_loss"] = r.mean_loss;
  if (r.validation) {
    nlohmann::ordered_json v = nlohmann::ordered_json::object();
    for (const auto& d : r.validation->dimensions) v[d.dimension] = {{"plcc", d.plcc}, {"srcc", d.srcc}};
    v["average"] = {{"plcc", r.validation->average_plcc}, {"srcc", r.validation->average_srcc}};
    j["validation"] = std::move(v);
  } else {
    j["validation"] = nullptr;
  }
  return j;
}

namespace {

nn::Tensor flip_horizontal(const nn::Tensor& t) {
  nn::Tensor out(t.channels(), t.height(), t.width());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, y, x) = t.at(c, y, t.width() - 1 - x);
  return out;
}

LayoutMask flip_horizontal(const LayoutMask& m) {
  LayoutMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.at(y, x) = m.at(y, m.width() - 1 - x);
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult train(model::DocIQModel& model, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> validation_set, const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorKind::kNoData, "training set is empty");
  const LossOptions options = loss_options(config);
  if (options.mos_only == model.config().multi_rater) {
    throw Error(ErrorKind::kConfiguration, "no_multirater flag disagrees with the model's head layout");
  }
  if (config.mean_bias_init) initialize_head_bias(model, train_set);
  Rng order_rng(derive_seed(config.seed, "train.order"));
  Rng augment_rng(derive_seed(config.seed, "train.augment"));
  Adam adam(model.parameters());
  nn::Gradients grads(model.parameters());
  nn::Gradients sample_grads(model.parameters());

  TrainResult result;
  result.parameter_count = model.parameter_count();
  nn::ParameterSet best = model.parameters();
  double best_score = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool done = false;
  for (int epoch = 0; epoch < config.epochs && !done; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr_schedule(config, epoch);
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size() && !done; start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      grads.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = train_set[order[k]];
        const bool flip = config.augment && augment_rng.bernoulli(0.5);
        const nn::Tensor image = flip ? flip_horizontal(s.image) : s.image;
        std::optional<LayoutMask> mask;
        if (s.mask) mask = flip ? flip_horizontal(*s.mask) : *s.mask;
        model::ForwardCache cache;
        const auto pred = model.forward(image, mask ? &*mask : nullptr, &cache);
        const auto loss = multi_rater_loss(pred, s.targets, options);
        if (!std::isfinite(loss.value) || !all_finite(pred.per_rater)) {
          throw Error(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                                  std::to_string(result.steps) + " (sample " + s.image_ref + ")");
        }
        sample_grads.zero();
        model.backward(cache, loss.grad_per_rater, loss.grad_mos, sample_grads);
        grads += sample_grads;
        loss_sum += loss.value;
        ++seen;
      }
      grads.scale(1.0 / static_cast<double>(stop - start));
      adam.step(model.parameters(), grads, record.lr);
      ++result.steps;
      ++record.steps;
      if (config.max_steps > 0 && result.steps >= config.max_steps) done = true;
    }
    record.mean_loss = loss_sum / static_cast<double>(seen);
    if (validation_set.size() >= 3) {
      try {
        record.validation = evaluate(model, validation_set);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kUndefinedCorrelation) throw;
      }
    }
    const double score = record.validation ? record.validation->average_srcc : -std::numeric_limits<double>::infinity();
    const bool last = done || epoch + 1 == config.epochs;
    if (score > best_score || (!result.best_validation_srcc && last && !record.validation)) {
      if (record.validation) {
        best_score = score;
        result.best_validation_srcc = score;
      }
      best = model.parameters();
      result.best_epoch = epoch;
    }
    if (log != nullptr) *log << to_json(record).dump() << '\n' << std::flush;
    result.log.push_back(std::move(record));
  }
  model.parameters() = best;
  return result;
}

void initialize_head_bias(model::DocIQModel& model, std::span<const PreparedSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::kNoData, "no samples to initialize head biases from");
  auto& params = model.parameters();
  for (int d = 0; d < model.config().dimension_count(); ++d) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.targets.mos[static_cast<std::size_t>(d)];
    mean /= static_cast<double>(samples.size());
    const int id = params.find("head.dim" + std::to_string(d) + ".bias");
    if (id < 0) throw Error(ErrorKind::kConfiguration, "model has no head for dimension " + std::to_string(d));
    std::fill(params[id].value.begin(), params[id].value.end(), mean);
  }
}

ingest::SplitIndices validation_split(const std::vector<ingest::DocumentSample>& samples, const TrainConfig& config) {
  ingest::SplitIndices all;
  all.train.resize(samples.size());
  std::iota(all.train.begin(), all.train.end(), 0);
  if (config.validation_fraction <= 0.0) return all;
  ingest::SplitSpec spec;
  spec.train_fraction = 1.0 - config.validation_fraction;
  spec.seed = derive_seed(config.seed, "validation");
  try {
    return ingest::split_indices(samples, spec);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kSplitInfeasible) throw;
    return all;
  }
}

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

// Converts text to the JSON type of `like`.
nlohmann::json coerce(const std::string& text, const nlohmann::json& like, const std::string& key, int line) {
  auto fail = [&](const std::string& what) -> nlohmann::json {
    throw Error(ErrorKind::kConfiguration, "line " + std::to_string(line) + ": key '" + key + "': " + what);
  };
  try {
    std::size_t used = 0;
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      return fail("expected true or false");
    }
    if (like.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') return fail("expected a non-negative integer");
      const auto v = std::stoull(text, &used);
      if (used != text.size()) return fail("expected an integer");
      return v;
    }
    if (like.is_number_integer()) {
      const auto v = std::stoll(text, &used);
      if (used != text.size()) return fail("expected an integer");
      return v;
    }
    if (like.is_number_float()) {
      const auto v = std::stod(text, &used);
      if (used != text.size()) return fail("expected a number");
      return v;
    }
    if (like.is_array()) {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) arr.push_back(item);
      }
      return arr;
    }
    return text;
  } catch (const std::logic_error&) {
    return fail("cannot parse '" + text + "'");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  nlohmann::json model_json = model::to_json(base.model);
  model_json.erase("seed");
  nlohmann::json train_json = to_json(base.train);
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfiguration, "line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    if (train_json.contains(key)) {
      train_json[key] = coerce(value, train_json[key], key, line);
    } else if (model_json.contains(key)) {
      model_json[key] = coerce(value, model_json[key], key, line);
    } else {
      throw Error(ErrorKind::kConfiguration, "line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  RunConfig out;
  model_json["seed"] = base.model.seed;
  out.model = model::model_config_from_json(model_json);
  out.train = train_config_from_json(train_json);
  out.train.validate();
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream os;
  auto emit = [&os](const std::string& key, const nlohmann::ordered_json& v) {
    os << key << " = ";
    if (v.is_string()) {
      os << v.get<std::string>();
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i].get<std::string>();
    } else {
      os << v.dump();
    }
    os << '\n';
  };
  const auto train_json = to_json(config.train);
  const auto model_json = model::to_json(config.model);
  os << "# training\n";
  for (const auto& [k, v] : train_json.items()) emit(k, v);
  os << "# model\n";
  for (const auto& [k, v] : model_json.items())
    if (k != "seed") emit(k, v);
  return os.str();
}

}  // namespace dociq::train
