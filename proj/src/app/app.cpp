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

#include "dociq/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dociq/corpus.hpp"
#include "dociq/error.hpp"
#include "dociq/ingest.hpp"
#include "dociq/model.hpp"
#include "dociq/random.hpp"

namespace dociq::app {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

ImageSize parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    std::size_t used = 0;
    const int h = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("height");
    const std::string rest = text.substr(x + 1);
    const int w = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("width");
    return {h, w};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--size", "size must look like HxW, got '" + text + "'");
  }
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void print_report(std::ostream& out, const train::EvaluationReport& r) {
  const bool logistic = !r.dimensions.empty() && r.dimensions.front().plcc_logistic.has_value();
  out << std::left << std::setw(18) << "dimension" << std::right << std::setw(9) << "PLCC" << std::setw(9) << "SRCC";
  if (logistic) out << std::setw(12) << "PLCC-logi";
  out << "\n";
  for (const auto& d : r.dimensions) {
    out << std::left << std::setw(18) << d.dimension << std::right << std::setw(9) << fixed(d.plcc) << std::setw(9)
        << fixed(d.srcc);
    if (d.plcc_logistic) out << std::setw(12) << fixed(*d.plcc_logistic);
    out << "\n";
  }
  out << std::left << std::setw(18) << "average" << std::right << std::setw(9) << fixed(r.average_plcc)
      << std::setw(9) << fixed(r.average_srcc) << "\n";
}

ordered_json corpus_provenance(const fs::path& manifest) {
  const fs::path meta = manifest.parent_path() / "corpus_meta.json";
  ordered_json p;
  p["manifest"] = fs::absolute(manifest).lexically_normal().string();
  if (fs::exists(meta)) {
    const auto j = read_json(meta);
    p["generator_version"] = j.value("generator_version", "");
    p["corpus_seed"] = j.value("seed", std::uint64_t{0});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(std::ostream& out, const fs::path& dir, int originals, const std::string& size, std::uint64_t seed,
              double noise_sd, double bias_sd, int raters) {
  corpus::CorpusConfig c;
  c.originals = originals;
  c.size = parse_size(size);
  c.seed = seed;
  c.ratings.rater_noise_sd = noise_sd;
  c.ratings.rater_bias_sd = bias_sd;
  c.ratings.rater_count = raters;
  c.ratings.panel_seed = derive_seed(seed, "panel");
  const auto n = corpus::generate_corpus(dir, c);
  out << "wrote " << n << " records to " << (dir / "manifest.jsonl").string() << "\n";
  return 0;
}

int cmd_ingest_validate(std::ostream& out, const fs::path& path) {
  const auto samples = ingest::load_manifest(resolve_manifest(path));
  std::set<std::string> origins;
  std::set<std::string> dims;
  for (const auto& s : samples) {
    origins.insert(s.origin_id);
    for (const auto& d : s.rater_scores) dims.insert(d.dimension);
  }
  out << "ok: " << samples.size() << " records, " << origins.size() << " origins, " << dims.size()
      << " dimensions\n";
  return 0;
}

int cmd_ingest_screen(std::ostream& out, const fs::path& path, const fs::path& dest) {
  const fs::path manifest = resolve_manifest(path);
  auto samples = ingest::load_manifest(manifest);
  const auto report = ingest::screen_samples(samples);
  const fs::path dest_dir = fs::absolute(dest).parent_path();
  for (auto& s : samples) {
    s.image = fs::relative(fs::absolute(s.image_path()), dest_dir).generic_string();
    if (s.mask) s.mask = fs::relative(fs::absolute(*s.mask_path()), dest_dir).generic_string();
  }
  ingest::write_manifest(dest, samples);
  const fs::path meta = manifest.parent_path() / "corpus_meta.json";
  const fs::path dest_meta = dest_dir / "corpus_meta.json";
  if (fs::exists(meta) && !fs::exists(dest_meta)) fs::copy_file(meta, dest_meta);

  ordered_json j = ordered_json::array();
  for (const auto& g : report) {
    ordered_json e;
    e["batch"] = g.batch;
    e["dimension"] = g.dimension;
    e["raters"] = g.raters;
    e["images"] = g.images;
    e["rejected"] = g.rejected;
    e["skipped"] = g.skipped;
    j.push_back(std::move(e));
    out << (g.batch.empty() ? "" : "batch " + g.batch + " ") << g.dimension << ": ";
    if (g.skipped) {
      out << "skipped (" << g.raters << " raters, " << g.images << " images)\n";
    } else {
      out << g.rejected.size() << " of " << g.raters << " raters rejected\n";
    }
  }
  fs::path report_path = dest;
  report_path += ".screening.json";
  write_json(report_path, j);
  return 0;
}

train::EvaluationReport evaluate_samples(const model::DocIQModel& net, const std::vector<ingest::DocumentSample>& s,
                                         bool logistic) {
  const auto prepared = train::prepare_samples(s, net.config());
  return train::evaluate(net, prepared, logistic);
}

int cmd_eval(std::ostream& out, const std::optional<fs::path>& ckpt, const std::optional<fs::path>& run_dir,
             const std::optional<fs::path>& data, const std::optional<fs::path>& predictions,
             const std::optional<fs::path>& out_dir, bool logistic) {
  train::EvaluationReport report;
  fs::path dest;
  if (predictions) {
    std::ifstream is(*predictions);
    if (!is) throw Error(ErrorKind::kIo, "cannot open " + predictions->string());
    std::vector<std::string> dims;
    std::vector<std::vector<double>> pred;
    std::vector<std::vector<double>> truth;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(line);
        if (dims.empty()) {
          for (const auto& [k, v] : j.at("predicted").items()) dims.push_back(k);
          pred.resize(dims.size());
          truth.resize(dims.size());
        }
        for (std::size_t d = 0; d < dims.size(); ++d) {
          pred[d].push_back(j.at("predicted").at(dims[d]).get<double>());
          truth[d].push_back(j.at("ground_truth").at(dims[d]).get<double>());
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kParse, "line " + std::to_string(n) + ": " + e.what());
      }
    }
    if (dims.empty()) throw Error(ErrorKind::kNoData, "prediction file is empty");
    report = train::evaluate_predictions(dims, pred, truth, logistic);
    dest = out_dir ? *out_dir : predictions->parent_path();
  } else if (run_dir) {
    const auto run_report = read_json(*run_dir / "report.json");
    const fs::path manifest = data ? resolve_manifest(*data) : fs::path(run_report.at("data").at("manifest").get<std::string>());
    const auto splits = read_json(*run_dir / "splits.json");
    std::set<std::string> test;
    for (const auto& s : splits.at("test")) test.insert(s.get<std::string>());
    std::vector<ingest::DocumentSample> selected;
    for (auto& s : ingest::load_manifest(manifest))
      if (test.count(s.image)) selected.push_back(std::move(s));
    const auto net = model::load_checkpoint(ckpt ? *ckpt : *run_dir / "model.ckpt");
    report = evaluate_samples(net, selected, logistic);
    dest = out_dir ? *out_dir : *run_dir;
  } else {
    if (!ckpt || !data) throw CLI::ValidationError("eval needs --predictions, --run, or both --ckpt and --data");
    const auto net = model::load_checkpoint(*ckpt);
    report = evaluate_samples(net, ingest::load_manifest(resolve_manifest(*data)), logistic);
    dest = out_dir ? *out_dir : ckpt->parent_path();
  }
  print_report(out, report);
  write_json(dest / "metrics.json", train::to_json(report));
  return 0;
}

int cmd_score(std::ostream& out, const fs::path& ckpt, const fs::path& image, const std::optional<fs::path>& mask) {
  const auto net = model::load_checkpoint(ckpt);
  const ImageSize size{net.config().height, net.config().width};
  RgbImage img = read_png_rgb(image);
  if (img.size() != size) img = resize_bilinear(img, size);
  std::optional<LayoutMask> m;
  if (mask) {
    m = read_png_gray(*mask);
    if (m->size() != size) m = resize_nearest(*m, size);
  }
  const auto pred = net.forward(img, m ? &*m : nullptr);
  ordered_json j;
  for (std::size_t d = 0; d < pred.mos.size(); ++d) j[net.config().dimensions[d]] = pred.mos[d];
  out << j.dump() << "\n";
  return 0;
}

int cmd_plot_mos(std::ostream& out, const fs::path& path, const fs::path& dest) {
  const fs::path manifest = resolve_manifest(path);
  const auto samples = ingest::load_manifest(manifest, {std::nullopt, false});
  if (samples.empty()) throw Error(ErrorKind::kNoData, "manifest " + manifest.string() + " has no records");
  const auto range = ingest::manifest_score_range(manifest);
  std::vector<std::string> dims;
  std::map<std::string, std::vector<double>> values;
  for (const auto& s : samples) {
    for (const auto& d : s.rater_scores) {
      if (!values.count(d.dimension)) dims.push_back(d.dimension);
      values[d.dimension].push_back(d.mos);
    }
  }
  ordered_json j;
  j["score_range"] = {range.min, range.max};
  j["bins"] = kHistogramBins;
  j["samples"] = samples.size();
  j["dimensions"] = ordered_json::object();
  fs::create_directories(dest);
  for (const auto& dim : dims) {
    const auto counts = histogram(values[dim], range.min, range.max);
    write_png(dest / ("mos_" + dim + ".png"), render_histogram(counts));
    j["dimensions"][dim] = counts;
    out << dim << ": " << values[dim].size() << " MOS values -> " << (dest / ("mos_" + dim + ".png")).string()
        << "\n";
  }
  write_json(dest / "mos_histograms.json", j);
  return 0;
}

int cmd_ablate(std::ostream& out, TrainRunOptions base) {
  ordered_json rows = ordered_json::array();
  const fs::path root = base.out;
  std::vector<std::pair<std::string, TrainRunSummary>> runs;
  for (const auto& a : train::ablation_table()) {
    TrainRunOptions o = base;
    o.ablations = a;
    o.out = root / a.label();
    out << "== " << a.label() << "\n" << std::flush;
    runs.emplace_back(a.label(), run_training(o));
  }
  out << std::left << std::setw(36) << "configuration" << std::right << std::setw(12) << "parameters";
  const auto& dims = runs.front().second.config.model.dimensions;
  int column = 12;
  for (const auto& d : dims) column = std::max(column, static_cast<int>(d.size()) + 7);
  for (const auto& d : dims) out << std::setw(column) << (d + " SRCC");
  out << std::setw(12) << "avg SRCC" << std::setw(12) << "avg PLCC" << "\n";
  for (const auto& [label, s] : runs) {
    ordered_json row;
    row["configuration"] = label;
    row["parameter_count"] = s.parameter_count;
    out << std::left << std::setw(36) << label << std::right << std::setw(12) << s.parameter_count;
    if (s.test) {
      row["test"] = train::to_json(*s.test);
      for (const auto& d : s.test->dimensions) out << std::setw(column) << fixed(d.srcc);
      out << std::setw(12) << fixed(s.test->average_srcc) << std::setw(12) << fixed(s.test->average_plcc);
    } else {
      row["test"] = nullptr;
      row["test_error"] = s.test_error;
      out << "  (test metrics undefined: " << s.test_error << ")";
    }
    out << "\n";
    rows.push_back(std::move(row));
  }
  write_json(root / "ablation.json", rows);
  return 0;
}

}  // namespace

fs::path resolve_manifest(const fs::path& data) {
  if (fs::is_directory(data)) return data / "manifest.jsonl";
  return data;
}

TrainRunSummary run_training(const TrainRunOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  train::RunConfig base;
  base.model = o.desk ? model::ModelConfig::desk() : model::ModelConfig::full_scale();
  train::RunConfig cfg = o.config ? train::load_run_config(*o.config, base) : base;
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.max_steps) cfg.train.max_steps = *o.max_steps;
  cfg.train.ablations.no_layout = cfg.train.ablations.no_layout || o.ablations.no_layout;
  cfg.train.ablations.no_fusion = cfg.train.ablations.no_fusion || o.ablations.no_fusion;
  cfg.train.ablations.no_multirater = cfg.train.ablations.no_multirater || o.ablations.no_multirater;
  train::apply_ablations(cfg.model, cfg.train.ablations);
  cfg.model.seed = derive_seed(cfg.train.seed, "model");
  cfg.train.validate();
  cfg.model.validate();

  const fs::path manifest = resolve_manifest(o.data);
  const auto samples = ingest::load_manifest(manifest);
  if (samples.empty()) throw Error(ErrorKind::kNoData, "manifest " + manifest.string() + " has no records");
  ingest::SplitSpec split;
  split.seed = derive_seed(cfg.train.seed, "split");
  const auto parts = ingest::split_indices(samples, split);
  std::vector<ingest::DocumentSample> train_samples;
  std::vector<ingest::DocumentSample> test_samples;
  for (auto i : parts.train) train_samples.push_back(samples[i]);
  for (auto i : parts.test) test_samples.push_back(samples[i]);
  const auto val_parts = train::validation_split(train_samples, cfg.train);
  std::vector<ingest::DocumentSample> fit_samples;
  std::vector<ingest::DocumentSample> val_samples;
  for (auto i : val_parts.train) fit_samples.push_back(train_samples[i]);
  for (auto i : val_parts.test) val_samples.push_back(train_samples[i]);

  fs::create_directories(o.out);
  ordered_json splits;
  auto names = [](const std::vector<ingest::DocumentSample>& v) {
    ordered_json a = ordered_json::array();
    for (const auto& s : v) a.push_back(s.image);
    return a;
  };
  splits["train"] = names(fit_samples);
  splits["validation"] = names(val_samples);
  splits["test"] = names(test_samples);
  write_json(o.out / "splits.json", splits);
  write_text(o.out / "config.txt", train::format_run_config(cfg));

  model::DocIQModel net(cfg.model);
  if (cfg.model.pretrained) {
    const fs::path weights = model::pretrained_backbone_path(cfg.model);
    if (!fs::exists(weights)) {
      throw Error(ErrorKind::kConfiguration, "pretrained backbone weights not found at " + weights.string() +
                                                 " (set DOCIQ_CACHE or disable pretrained)");
    }
    model::load_backbone_weights(net, weights);
  }
  const auto fit = train::prepare_samples(fit_samples, cfg.model);
  const auto val = train::prepare_samples(val_samples, cfg.model);
  const auto test = train::prepare_samples(test_samples, cfg.model);

  TrainRunSummary summary;
  summary.config = cfg;
  summary.parameter_count = net.parameter_count();
  summary.train_samples = fit.size();
  summary.validation_samples = val.size();
  summary.test_samples = test.size();
  {
    std::ofstream log(o.out / "train_log.jsonl", std::ios::binary);
    if (!log) throw Error(ErrorKind::kIo, "cannot write training log");
    summary.result = train::train(net, fit, val, cfg.train, &log);
  }
  model::save_checkpoint(o.out / "model.ckpt", net);

  ordered_json metrics;
  try {
    summary.test = train::evaluate(net, test);
    metrics = train::to_json(*summary.test);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefinedCorrelation && e.kind() != ErrorKind::kInvalidArgument) throw;
    summary.test_error = e.what();
    metrics["error"] = summary.test_error;
  }
  write_json(o.out / "metrics.json", metrics);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ordered_json report;
  report["model"] = model::to_json(cfg.model);
  report["train"] = train::to_json(cfg.train);
  report["ablations"] = cfg.train.ablations.label();
  report["data"] = corpus_provenance(manifest);
  report["root_seed"] = cfg.train.seed;
  report["parameter_count"] = summary.parameter_count;
  report["samples"] = {{"train", fit.size()}, {"validation", val.size()}, {"test", test.size()}};
  report["best_epoch"] = summary.result.best_epoch;
  report["steps"] = summary.result.steps;
  report["test"] = metrics;
  report["wall_clock_seconds"] = seconds;
  write_json(o.out / "report.json", report);
  return summary;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DocIQ: document image quality assessment"};
  app.name("dociq");
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic rated corpus");
  fs::path synth_out;
  int originals = 4;
  std::string size = "256x256";
  std::uint64_t seed = 0;
  double noise_sd = 0.4;
  double bias_sd = 0.3;
  int raters = 15;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--originals", originals, "Number of original documents");
  synth->add_option("--size", size, "Image size HxW");
  synth->add_option("--seed", seed, "Root seed");
  synth->add_option("--noise-sd", noise_sd, "Per-score rater noise sd");
  synth->add_option("--bias-sd", bias_sd, "Per-rater bias sd");
  synth->add_option("--raters", raters, "Raters per image");

  auto* ingest_cmd = app.add_subcommand("ingest", "Validate or screen a manifest");
  ingest_cmd->require_subcommand(1);
  auto* validate = ingest_cmd->add_subcommand("validate", "Load and check a manifest");
  fs::path validate_path;
  validate->add_option("path", validate_path, "Manifest or corpus directory")->required();
  auto* screen = ingest_cmd->add_subcommand("screen", "BT.500 rater screening");
  fs::path screen_path;
  fs::path screen_out;
  screen->add_option("path", screen_path, "Manifest or corpus directory")->required();
  screen->add_option("--out", screen_out, "Screened manifest path")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
  TrainRunOptions topt;
  std::string ablate;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> epochs;
  std::optional<int> max_steps;
  std::optional<fs::path> config_path;
  train_cmd->add_option("--data", topt.data, "Corpus directory or manifest")->required();
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--out", topt.out, "Run directory")->required();
  train_cmd->add_option("--ablate", ablate, "Comma list of no_layout,no_fusion,no_multirater");
  train_cmd->add_flag("--desk", topt.desk, "256x256 tiny-backbone profile");
  train_cmd->add_option("--seed", train_seed, "Root seed");
  train_cmd->add_option("--epochs", epochs, "Override the epoch count");
  train_cmd->add_option("--max-steps", max_steps, "Stop after this many optimizer steps");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train the five ablation configurations");
  TrainRunOptions aopt;
  std::optional<fs::path> ablate_config;
  std::optional<std::uint64_t> ablate_seed;
  std::optional<int> ablate_epochs;
  std::optional<int> ablate_steps;
  ablate_cmd->add_option("--data", aopt.data, "Corpus directory or manifest")->required();
  ablate_cmd->add_option("--config", ablate_config, "key = value config file");
  ablate_cmd->add_option("--out", aopt.out, "Output directory")->required();
  ablate_cmd->add_flag("--desk", aopt.desk, "256x256 tiny-backbone profile");
  ablate_cmd->add_option("--seed", ablate_seed, "Root seed");
  ablate_cmd->add_option("--epochs", ablate_epochs, "Override the epoch count");
  ablate_cmd->add_option("--max-steps", ablate_steps, "Stop after this many optimizer steps");

  auto* eval = app.add_subcommand("eval", "PLCC / SRCC per dimension");
  std::optional<fs::path> eval_ckpt;
  std::optional<fs::path> eval_run;
  std::optional<fs::path> eval_data;
  std::optional<fs::path> eval_pred;
  std::optional<fs::path> eval_out;
  bool logistic = false;
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file");
  eval->add_option("--run", eval_run, "Run directory written by train");
  eval->add_option("--data", eval_data, "Corpus directory or manifest");
  eval->add_option("--predictions", eval_pred, "JSON lines with predicted and ground_truth maps");
  eval->add_option("--out", eval_out, "Directory for metrics.json");
  eval->add_flag("--logistic", logistic, "Also report PLCC after a 4-parameter logistic fit");

  auto* score = app.add_subcommand("score", "Predict MOS for one image");
  fs::path score_ckpt;
  fs::path score_image;
  std::optional<fs::path> score_mask;
  score->add_option("--ckpt", score_ckpt, "Checkpoint file")->required();
  score->add_option("--image", score_image, "PNG image")->required();
  score->add_option("--mask", score_mask, "Layout mask PNG");

  auto* plot = app.add_subcommand("plot-mos", "Histogram the MOS of each dimension");
  fs::path plot_path;
  fs::path plot_out;
  plot->add_option("manifest", plot_path, "Manifest or corpus directory")->required();
  plot->add_option("--out", plot_out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(out, synth_out, originals, size, seed, noise_sd, bias_sd, raters);
    if (validate->parsed()) return cmd_ingest_validate(out, validate_path);
    if (screen->parsed()) return cmd_ingest_screen(out, screen_path, screen_out);
    if (train_cmd->parsed()) {
      topt.ablations = train::Ablations::parse(ablate);
      topt.seed = train_seed;
      topt.epochs = epochs;
      topt.max_steps = max_steps;
      topt.config = config_path;
      const auto s = run_training(topt);
      out << "trained " << s.result.steps << " steps (" << s.parameter_count << " parameters), best epoch "
          << s.result.best_epoch << "\n";
      if (s.test) {
        print_report(out, *s.test);
      } else {
        out << "test metrics undefined: " << s.test_error << "\n";
      }
      return 0;
    }
    if (ablate_cmd->parsed()) {
      aopt.config = ablate_config;
      aopt.seed = ablate_seed;
      aopt.epochs = ablate_epochs;
      aopt.max_steps = ablate_steps;
      return cmd_ablate(out, aopt);
    }
    if (eval->parsed()) return cmd_eval(out, eval_ckpt, eval_run, eval_data, eval_pred, eval_out, logistic);
    if (score->parsed()) return cmd_score(out, score_ckpt, score_image, score_mask);
    if (plot->parsed()) return cmd_plot_mos(out, plot_path, plot_out);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dociq::app
