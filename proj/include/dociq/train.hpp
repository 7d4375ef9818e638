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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dociq/image.hpp"
#include "dociq/ingest.hpp"
#include "dociq/model.hpp"
#include "dociq/nn.hpp"

namespace dociq::train {

struct LossWeights {
  double rater = 1.0;
  double mos = 1.0;
};

struct Ablations {
  bool no_layout = false;
  bool no_fusion = false;
  bool no_multirater = false;

  /// "full" or the enabled flags joined by '+'.
  std::string label() const;
  /// Parses "no_layout,no_fusion"; unknown names throw Error(kConfiguration).
  static Ablations parse(std::string_view list);
};

/// The five architectures of the ablation table: full model, then each of
/// the three single ablations, then all three removed.
std::vector<Ablations> ablation_table();

void apply_ablations(model::ModelConfig& config, const Ablations& ablations);

struct TrainConfig {
  double lr = 2e-4;
  int step_size = 10;
  double decay = 0.6;
  int epochs = 60;
  int batch = 20;
  LossWeights loss_weights;
  Ablations ablations;
  /// Match sorted prediction and target vectors instead of rater positions.
  bool order_invariant = false;
  /// Random horizontal flips of training images.
  bool augment = false;
  /// Fraction of the training origins held out for checkpoint selection.
  double validation_fraction = 0.1;
  /// Start each head's biases at the mean training MOS of its dimension.
  bool mean_bias_init = true;
  /// Stop after this many optimizer steps; 0 runs every epoch.
  int max_steps = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);

/// lr * decay^floor(epoch / step_size).
double lr_schedule(const TrainConfig& config, int epoch);

// ---------------------------------------------------------------------------
// Targets and loss

struct RaterTargets {
  int dimensions = 0;
  int raters = 0;
  std::vector<double> scores;          // dimensions x raters
  std::vector<std::uint8_t> present;   // dimensions x raters
  std::vector<double> mos;

  double score(int d, int r) const { return scores[static_cast<std::size_t>(d) * raters + r]; }
  bool is_present(int d, int r) const { return present[static_cast<std::size_t>(d) * raters + r] != 0; }
  /// Throws Error(kInvalidTarget) for shape errors or an all-absent dimension.
  void validate() const;
};

/// Builds targets for the given dimensions from a sample's retained scores.
RaterTargets targets_from_sample(const ingest::DocumentSample& sample, const std::vector<std::string>& dimensions,
                                 int raters);

struct LossOptions {
  LossWeights weights;
  bool mos_only = false;
  bool order_invariant = false;
};

struct LossResult {
  double value = 0.0;
  double rater_term = 0.0;
  double mos_term = 0.0;
  std::vector<double> grad_per_rater;  // dimensions x outputs
  std::vector<double> grad_mos;
};

/// w_rater * MSE over present per-rater entries + w_mos * MSE over MOS.
/// With mos_only the prediction may carry any number of outputs per head and
/// only the MOS term is used.
LossResult multi_rater_loss(const model::ScorePrediction& pred, const RaterTargets& target, const LossOptions& options);

LossOptions loss_options(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Data

struct PreparedSample {
  nn::Tensor image;
  std::optional<LayoutMask> mask;
  RaterTargets targets;
  std::string origin_id;
  std::string image_ref;
};

/// Loads and resizes images and masks to the model input size.
std::vector<PreparedSample> prepare_samples(const std::vector<ingest::DocumentSample>& samples,
                                            const model::ModelConfig& config);

// ---------------------------------------------------------------------------
// Optimizer

class Adam {
 public:
  explicit Adam(const nn::ParameterSet& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(nn::ParameterSet& params, const nn::Gradients& grads, double lr);
  int steps() const { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct DimensionMetrics {
  std::string dimension;
  double plcc = 0.0;
  double srcc = 0.0;
  std::optional<double> plcc_logistic;
};

struct EvaluationReport {
  std::vector<DimensionMetrics> dimensions;
  double average_plcc = 0.0;
  double average_srcc = 0.0;
  std::size_t samples = 0;
};

nlohmann::ordered_json to_json(const EvaluationReport& report);

/// predicted[d][i] against ground_truth[d][i]. Undefined correlations are
/// rethrown naming the dimension.
EvaluationReport evaluate_predictions(const std::vector<std::string>& dimensions,
                                      const std::vector<std::vector<double>>& predicted,
                                      const std::vector<std::vector<double>>& ground_truth, bool logistic = false);

/// Predicted MOS for every sample, dimension-major.
std::vector<std::vector<double>> predict_mos(const model::DocIQModel& model, std::span<const PreparedSample> samples);

EvaluationReport evaluate(const model::DocIQModel& model, std::span<const PreparedSample> samples,
                          bool logistic = false);

/// Mean loss over the samples under the current weights.
double dataset_loss(const model::DocIQModel& model, std::span<const PreparedSample> samples, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  int steps = 0;
  double mean_loss = 0.0;
  std::optional<EvaluationReport> validation;
};

nlohmann::ordered_json to_json(const EpochRecord& record);

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  std::optional<double> best_validation_srcc;
  int steps = 0;
  std::size_t parameter_count = 0;
};

/// Adam on the multi-rater loss with step decay. Leaves the model holding
/// the parameters of the epoch with the best mean validation SRCC (the last
/// epoch when no validation correlation is defined). Appends one JSON line
/// per epoch to `log` when given. Throws Error(kDivergence) on a non-finite
/// loss.
TrainResult train(model::DocIQModel& model, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> validation_set, const TrainConfig& config,
                  std::ostream* log = nullptr);

/// Sets every output bias of head d to the mean target MOS of dimension d.
void initialize_head_bias(model::DocIQModel& model, std::span<const PreparedSample> samples);

/// Splits samples into training and validation by origin group using
/// config.validation_fraction. A fraction of 0 or too few groups yields an
/// empty validation set.
ingest::SplitIndices validation_split(const std::vector<ingest::DocumentSample>& samples, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Config files

struct RunConfig {
  model::ModelConfig model;
  TrainConfig train;
};

/// Flat `key = value` text; '#' starts a comment. Keys mirror the fields of
/// TrainConfig and ModelConfig. Unknown keys throw Error(kConfiguration).
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_run_config(const RunConfig& config);

}  // namespace dociq::train
