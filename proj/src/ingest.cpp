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

#include "dociq/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "dociq/error.hpp"
#include "dociq/random.hpp"

namespace dociq::ingest {
namespace fs = std::filesystem;

std::size_t DimensionScores::present_count() const {
  return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); }));
}

std::optional<fs::path> DocumentSample::mask_path() const {
  if (!mask) return std::nullopt;
  return base_dir / *mask;
}

const DimensionScores* DocumentSample::find(std::string_view dimension) const {
  for (const auto& d : rater_scores)
    if (d.dimension == dimension) return &d;
  return nullptr;
}

double DocumentSample::mos(std::string_view dimension) const {
  const auto* d = find(dimension);
  if (d == nullptr) {
    throw Error(ErrorKind::kMissingScores, "sample " + image + " has no dimension '" + std::string(dimension) + "'");
  }
  return d->mos;
}

namespace {

struct Moments {
  double mean = 0.0;
  double population_sd = 0.0;
  std::size_t n = 0;
};

Moments present_moments(const std::vector<std::optional<double>>& scores) {
  Moments m;
  double sum = 0.0;
  for (const auto& s : scores)
    if (s) {
      sum += *s;
      ++m.n;
    }
  if (m.n == 0) return m;
  m.mean = sum / static_cast<double>(m.n);
  double ss = 0.0;
  for (const auto& s : scores)
    if (s) ss += (*s - m.mean) * (*s - m.mean);
  m.population_sd = std::sqrt(ss / static_cast<double>(m.n));
  return m;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what);
}

DocumentSample parse_record(const nlohmann::ordered_json& j, std::size_t line, const ScoreRange& range) {
  if (!j.is_object()) fail_line(line, "record is not a JSON object");
  DocumentSample s;
  auto require_string = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) fail_line(line, std::string("missing string field '") + key + "'");
    return j.at(key).get<std::string>();
  };
  s.image = require_string("image");
  s.origin_id = require_string("origin_id");
  if (j.contains("mask") && !j.at("mask").is_null()) {
    if (!j.at("mask").is_string()) fail_line(line, "field 'mask' must be a string or null");
    s.mask = j.at("mask").get<std::string>();
  }
  if (j.contains("batch") && !j.at("batch").is_null()) {
    const auto& b = j.at("batch");
    if (b.is_string()) {
      s.batch = b.get<std::string>();
    } else if (b.is_number_integer()) {
      s.batch = std::to_string(b.get<long long>());
    } else {
      fail_line(line, "field 'batch' must be a string or integer");
    }
  }
  if (!j.contains("scores") || !j.at("scores").is_object() || j.at("scores").empty()) {
    fail_line(line, "missing object field 'scores'");
  }
  for (const auto& [dim, list] : j.at("scores").items()) {
    if (!list.is_array()) fail_line(line, "scores for '" + dim + "' must be an array");
    DimensionScores ds{dim, {}, 0.0, 0.0};
    for (const auto& v : list) {
      if (v.is_null()) {
        ds.scores.emplace_back(std::nullopt);
        continue;
      }
      if (!v.is_number()) fail_line(line, "non-numeric score for '" + dim + "'");
      const double x = v.get<double>();
      if (!std::isfinite(x) || x < range.min || x > range.max) {
        fail_line(line, "score " + v.dump() + " for '" + dim + "' outside [" + nlohmann::json(range.min).dump() +
                            ", " + nlohmann::json(range.max).dump() + "]");
      }
      ds.scores.emplace_back(x);
    }
    const Moments m = present_moments(ds.scores);
    if (m.n == 0) fail_line(line, "dimension '" + dim + "' has no retained scores");
    ds.mos = m.mean;
    ds.mos_sd = m.population_sd;
    s.rater_scores.push_back(std::move(ds));
  }
  if (j.contains("mos") && !j.at("mos").is_null()) {
    const auto& mos = j.at("mos");
    if (!mos.is_object()) fail_line(line, "field 'mos' must be an object");
    for (auto& ds : s.rater_scores) {
      if (!mos.contains(ds.dimension)) fail_line(line, "mos lacks dimension '" + ds.dimension + "'");
      const auto& v = mos.at(ds.dimension);
      if (!v.is_number()) fail_line(line, "mos for '" + ds.dimension + "' is not a number");
      const double stored = v.get<double>();
      if (std::abs(stored - ds.mos) > 1e-9) {
        fail_line(line, "stored mos " + v.dump() + " for '" + ds.dimension + "' disagrees with the score mean " +
                            nlohmann::json(ds.mos).dump());
      }
      ds.mos = stored;
    }
    for (const auto& [dim, v] : mos.items()) {
      if (s.find(dim) == nullptr) fail_line(line, "mos names dimension '" + dim + "' absent from scores");
    }
  }
  if (j.contains("trace") && !j.at("trace").is_null()) {
    try {
      s.trace = corpus::trace_from_json(j.at("trace"));
    } catch (const Error& e) {
      fail_line(line, e.what());
    }
  }
  static const std::set<std::string> kKnown = {"image", "mask", "origin_id", "batch", "scores", "mos", "trace"};
  for (const auto& [key, value] : j.items())
    if (!kKnown.count(key)) s.extra[key] = value;
  return s;
}

}  // namespace

ScoreRange manifest_score_range(const fs::path& manifest) {
  ScoreRange range;
  const fs::path meta = manifest.parent_path() / "corpus_meta.json";
  if (!fs::exists(meta)) return range;
  std::ifstream is(meta);
  try {
    const auto j = nlohmann::json::parse(is);
    if (j.contains("ratings") && j.at("ratings").contains("score_range")) {
      const auto& r = j.at("ratings").at("score_range");
      range.min = r.at(0).get<double>();
      range.max = r.at(1).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, meta.string() + ": " + e.what());
  }
  if (!(range.min < range.max)) throw Error(ErrorKind::kParse, meta.string() + ": score range must satisfy min < max");
  return range;
}

std::vector<DocumentSample> load_manifest(const fs::path& path, const LoadOptions& options) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  const ScoreRange range = options.score_range ? *options.score_range : manifest_score_range(path);
  const fs::path base = path.parent_path();
  std::vector<DocumentSample> samples;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail_line(line, std::string("malformed JSON: ") + e.what());
    }
    DocumentSample s = parse_record(j, line, range);
    s.base_dir = base;
    if (options.verify_files) {
      if (!fs::exists(s.image_path())) {
        throw Error(ErrorKind::kIntegrity, "line " + std::to_string(line) + ": image " + s.image_path().string() +
                                               " does not exist");
      }
      if (s.mask && !fs::exists(*s.mask_path())) {
        throw Error(ErrorKind::kIntegrity, "line " + std::to_string(line) + ": mask " + s.mask_path()->string() +
                                               " does not exist");
      }
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

nlohmann::ordered_json to_json(const DocumentSample& s) {
  nlohmann::ordered_json j;
  j["image"] = s.image;
  j["mask"] = s.mask ? nlohmann::ordered_json(*s.mask) : nlohmann::ordered_json(nullptr);
  j["origin_id"] = s.origin_id;
  if (s.batch) j["batch"] = *s.batch;
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  nlohmann::ordered_json mos = nlohmann::ordered_json::object();
  for (const auto& d : s.rater_scores) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& v : d.scores) list.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    scores[d.dimension] = std::move(list);
    mos[d.dimension] = d.mos;
  }
  j["scores"] = std::move(scores);
  j["mos"] = std::move(mos);
  if (s.trace) j["trace"] = corpus::to_json(*s.trace);
  for (const auto& [key, value] : s.extra.items()) j[key] = value;
  return j;
}

void write_manifest(const fs::path& path, const std::vector<DocumentSample>& samples) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write manifest " + path.string());
  for (const auto& s : samples) os << to_json(s).dump() << '\n';
  if (!os) throw Error(ErrorKind::kIo, "failed writing manifest " + path.string());
}

void aggregate_mos(DocumentSample& sample) {
  if (sample.rater_scores.empty()) {
    throw Error(ErrorKind::kMissingScores, "sample " + sample.image + " carries no score dimensions");
  }
  for (auto& d : sample.rater_scores) {
    const Moments m = present_moments(d.scores);
    if (m.n == 0) {
      throw Error(ErrorKind::kMissingScores,
                  "sample " + sample.image + " has no retained scores for '" + d.dimension + "'");
    }
    d.mos = m.mean;
    d.mos_sd = m.population_sd;
  }
}

void aggregate_mos(std::vector<DocumentSample>& samples) {
  for (auto& s : samples) aggregate_mos(s);
}

// ---------------------------------------------------------------------------
// Screening

RaterMatrix::RaterMatrix(std::vector<std::string> raters, std::vector<std::string> images)
    : rater_ids(std::move(raters)), image_ids(std::move(images)), scores(rater_ids.size() * image_ids.size()) {}

void RaterMatrix::validate() const {
  if (scores.size() != rater_ids.size() * image_ids.size()) {
    throw Error(ErrorKind::kInvalidArgument, "rater matrix has " + std::to_string(scores.size()) +
                                                 " entries for " + std::to_string(rater_ids.size()) + " raters x " +
                                                 std::to_string(image_ids.size()) + " images");
  }
  for (const auto& s : scores)
    if (s && !std::isfinite(*s)) throw Error(ErrorKind::kInvalidArgument, "rater matrix holds a non-finite score");
}

std::vector<RaterStatistics> bt500_counts(const RaterMatrix& m) {
  std::vector<RaterStatistics> stats(m.rater_ids.size());
  for (int r = 0; r < m.rater_count(); ++r) stats[static_cast<std::size_t>(r)].rater_id = m.rater_ids[static_cast<std::size_t>(r)];
  for (int i = 0; i < m.image_count(); ++i) {
    double sum = 0.0;
    int n = 0;
    for (int r = 0; r < m.rater_count(); ++r)
      if (const auto& s = m.at(r, i)) {
        sum += *s;
        ++n;
      }
    if (n < 2) continue;
    const double mean = sum / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (int r = 0; r < m.rater_count(); ++r)
      if (const auto& s = m.at(r, i)) {
        const double d = *s - mean;
        m2 += d * d;
        m4 += d * d * d * d;
      }
    const double sd = std::sqrt(m2 / (n - 1));
    m2 /= n;
    m4 /= n;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 3.0;
    const double width = (kurtosis >= 2.0 && kurtosis <= 4.0) ? 2.0 * sd : std::sqrt(20.0) * sd;
    for (int r = 0; r < m.rater_count(); ++r) {
      const auto& s = m.at(r, i);
      if (!s) continue;
      auto& st = stats[static_cast<std::size_t>(r)];
      ++st.compared;
      if (*s > mean + width) ++st.above;
      if (*s < mean - width) ++st.below;
    }
  }
  return stats;
}

bool bt500_reject(const RaterStatistics& st) {
  const int outside = st.above + st.below;
  if (st.compared == 0 || outside == 0) return false;
  const double fraction = static_cast<double>(outside) / st.compared;
  const double asymmetry = static_cast<double>(std::abs(st.above - st.below)) / outside;
  return fraction > kRejectFraction && asymmetry < kRejectSymmetry;
}

ScreeningResult screen_raters(const RaterMatrix& matrix) {
  matrix.validate();
  if (matrix.rater_count() < 3 || matrix.image_count() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "screening needs >= 3 raters and >= 2 images, got " +
                                                 std::to_string(matrix.rater_count()) + " x " +
                                                 std::to_string(matrix.image_count()));
  }
  ScreeningResult result{matrix, {}, 0};
  while (true) {
    ++result.rounds;
    const auto stats = bt500_counts(result.matrix);
    std::vector<int> keep;
    for (int r = 0; r < result.matrix.rater_count(); ++r) {
      if (bt500_reject(stats[static_cast<std::size_t>(r)])) {
        result.rejected.push_back(result.matrix.rater_ids[static_cast<std::size_t>(r)]);
      } else {
        keep.push_back(r);
      }
    }
    if (keep.size() == static_cast<std::size_t>(result.matrix.rater_count())) break;
    if (keep.size() < 3) {
      throw Error(ErrorKind::kScreeningDegenerate,
                  "only " + std::to_string(keep.size()) + " raters remain after screening");
    }
    std::vector<std::string> ids;
    for (int r : keep) ids.push_back(result.matrix.rater_ids[static_cast<std::size_t>(r)]);
    RaterMatrix next(std::move(ids), result.matrix.image_ids);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (int i = 0; i < next.image_count(); ++i) next.at(static_cast<int>(k), i) = result.matrix.at(keep[k], i);
    result.matrix = std::move(next);
  }
  return result;
}

std::vector<GroupScreening> screen_samples(std::vector<DocumentSample>& samples) {
  // (batch, dimension) -> sample indices, in first-appearance order.
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& d : samples[i].rater_scores) {
      auto key = std::make_pair(samples[i].batch.value_or(""), d.dimension);
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) keys.push_back(key);
      it->second.push_back(i);
    }
  }
  std::vector<GroupScreening> report;
  for (const auto& key : keys) {
    const auto& members = groups.at(key);
    GroupScreening g;
    g.batch = key.first;
    g.dimension = key.second;
    g.images = static_cast<int>(members.size());
    g.raters = static_cast<int>(samples[members.front()].find(key.second)->scores.size());
    for (std::size_t i : members) {
      if (static_cast<int>(samples[i].find(key.second)->scores.size()) != g.raters) {
        throw Error(ErrorKind::kInvalidArgument, "sample " + samples[i].image + " has a different rater count for '" +
                                                     key.second + "' than its batch");
      }
    }
    if (g.raters < 3 || g.images < 2) {
      g.skipped = true;
      report.push_back(std::move(g));
      continue;
    }
    std::vector<std::string> raters;
    for (int r = 0; r < g.raters; ++r) raters.push_back(std::to_string(r));
    std::vector<std::string> images;
    for (std::size_t i : members) images.push_back(samples[i].image);
    RaterMatrix m(raters, images);
    for (int r = 0; r < g.raters; ++r)
      for (int k = 0; k < g.images; ++k)
        m.at(r, k) = samples[members[static_cast<std::size_t>(k)]].find(key.second)->scores[static_cast<std::size_t>(r)];
    auto result = screen_raters(m);
    for (const auto& id : result.rejected) {
      const auto r = static_cast<std::size_t>(std::stoi(id));
      for (std::size_t i : members) {
        for (auto& d : samples[i].rater_scores)
          if (d.dimension == key.second) d.scores[r] = std::nullopt;
      }
    }
    g.rejected = std::move(result.rejected);
    report.push_back(std::move(g));
  }
  aggregate_mos(samples);
  return report;
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
}

SplitIndices split_indices(const std::vector<DocumentSample>& samples, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::size_t>> groups;
  if (spec.group_by_origin) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto [it, inserted] = index.try_emplace(samples[i].origin_id, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < samples.size(); ++i) groups.push_back({i});
  }
  if (groups.size() < 2) {
    throw Error(ErrorKind::kSplitInfeasible, "split needs at least 2 " +
                                                 std::string(spec.group_by_origin ? "origin groups" : "samples") +
                                                 ", got " + std::to_string(groups.size()));
  }
  Rng rng(derive_seed(spec.seed, "split"));
  rng.shuffle(groups.begin(), groups.end());
  const double target = spec.train_fraction * static_cast<double>(samples.size());
  std::vector<bool> in_train(groups.size(), false);
  double count = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto size = static_cast<double>(groups[g].size());
    if (2.0 * count + size <= 2.0 * target) {
      in_train[g] = true;
      count += size;
    }
  }
  if (std::none_of(in_train.begin(), in_train.end(), [](bool b) { return b; })) in_train.front() = true;
  if (std::all_of(in_train.begin(), in_train.end(), [](bool b) { return b; })) in_train.back() = false;
  SplitIndices out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& side = in_train[g] ? out.train : out.test;
    side.insert(side.end(), groups[g].begin(), groups[g].end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<std::vector<DocumentSample>, std::vector<DocumentSample>> split_dataset(
    const std::vector<DocumentSample>& samples, const SplitSpec& spec) {
  const auto idx = split_indices(samples, spec);
  std::pair<std::vector<DocumentSample>, std::vector<DocumentSample>> out;
  for (std::size_t i : idx.train) out.first.push_back(samples[i]);
  for (std::size_t i : idx.test) out.second.push_back(samples[i]);
  return out;
}

}  // namespace dociq::ingest
