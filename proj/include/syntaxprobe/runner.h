// Copyright 2026 The syntaxprobe Authors.
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

#ifndef SYNTAXPROBE_RUNNER_H_
#define SYNTAXPROBE_RUNNER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntaxprobe/featurestore.h"
#include "syntaxprobe/metrics.h"
#include "syntaxprobe/pooling.h"
#include "syntaxprobe/probe.h"
#include "syntaxprobe/treebank.h"

namespace syntaxprobe {

inline constexpr char kPretrainedSource[] = "pretrained";
inline constexpr char kBaselineSource[] = "baseline";

struct SweepConfig {
  Task task = Task::kPos;
  // nullopt sweeps every layer in the manifest; an empty list is an error.
  std::optional<std::vector<std::uint32_t>> layers;
  TrainConfig train = TrainConfig::ForTask(Task::kPos);
  SplitSpec split;
  std::filesystem::path treebank_path;
  std::filesystem::path manifest_path;
  std::optional<std::filesystem::path> baseline_manifest;
  std::optional<std::filesystem::path> tagset_path;
  std::filesystem::path output_dir;
  PoolingOptions pooling;
  int jobs = 1;
};

// Filtered treebank, its split, and the label vocabulary of the training
// split. Shared read-only by every layer of a sweep.
struct PreparedData {
  TreebankSplits splits;
  LabelVocab vocab;
  FilterLog filter_log;
  std::size_t input_utterances = 0;
};

PreparedData PrepareData(const Treebank& treebank, Task task, const SplitSpec& split,
                         const std::set<std::string>& allowed_tags = {});

struct LayerReport {
  std::string source = kPretrainedSource;
  int layer = 0;
  Task task = Task::kPos;
  bool ok = false;
  std::string error;
  EvalReport dev;
  EvalReport test;
  int best_epoch = 0;
  int epochs_run = 0;
  std::size_t fallback_tokens = 0;
  double wallclock_s = 0.0;
  std::string epoch_log;  // path relative to the output dir

  nlohmann::json ToJson() const;
  static LayerReport FromJson(const nlohmann::json& j);
};

// Pools train/dev/test for one layer, trains with early stopping on dev and
// evaluates on test. Errors are caught and recorded in the report. When
// `output_dir` is non-empty the epoch log and checkpoint are written under
// `<output_dir>/<source>/`.
LayerReport RunLayer(const PreparedData& data, const FeatureStore& store,
                     const std::string& source, std::uint32_t layer, Task task,
                     const TrainConfig& train_config, const PoolingOptions& pooling,
                     const std::filesystem::path& output_dir);

struct SweepResult {
  std::vector<LayerReport> reports;  // source order, then ascending layer
  std::map<std::string, int> best_layers;
};

// Throws std::invalid_argument for configuration errors; per-layer failures
// are recorded in the corresponding report instead.
SweepResult RunLayerSweep(const SweepConfig& config);

// `source,layer,task,dev_acc,test_acc` for every successful report.
std::string SummaryCsv(const std::vector<LayerReport>& reports);

// Highest dev accuracy among successful reports of `source`; ties go to the
// lower layer. Returns -1 when none succeeded.
int SelectBestLayer(const std::vector<LayerReport>& reports, const std::string& source);

// Writes summary.csv, <source>/layer_<L>.json, best_layers.json and
// <source>_best_per_label.csv. Returns the best layer per source.
std::map<std::string, int> EmitReport(const std::vector<LayerReport>& reports,
                                      const std::filesystem::path& output_dir);

// Reads every <source>/layer_<L>.json under a sweep directory.
std::vector<LayerReport> LoadLayerReports(const std::filesystem::path& output_dir);

// SYNTAXPROBE_CACHE_DIR when set, otherwise `fallback`.
std::filesystem::path ResolveCacheDir(const std::filesystem::path& fallback);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_RUNNER_H_
