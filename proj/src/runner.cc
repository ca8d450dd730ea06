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

#include "syntaxprobe/runner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <regex>
#include <set>
#include <stdexcept>
#include <thread>

#include "syntaxprobe/util.h"

namespace syntaxprobe {

PreparedData PrepareData(const Treebank& treebank, Task task, const SplitSpec& split,
                         const std::set<std::string>& allowed_tags) {
  PreparedData data;
  data.input_utterances = treebank.utterances.size();
  FilterResult filtered = FilterTreebank(treebank, allowed_tags);
  data.filter_log = std::move(filtered.log);
  data.splits = SplitDataset(filtered.kept, split);
  std::vector<std::string> labels = TaskLabels(data.splits.train, task);
  data.vocab = BuildLabelVocab(labels, LabelKindFor(task));
  return data;
}

nlohmann::json LayerReport::ToJson() const {
  nlohmann::json j = {{"source", source},         {"layer", layer},
                      {"task", TaskName(task)},   {"ok", ok},
                      {"best_epoch", best_epoch}, {"epochs_run", epochs_run},
                      {"fallback_tokens", fallback_tokens},
                      {"wallclock_s", wallclock_s}, {"epoch_log", epoch_log}};
  if (ok) {
    j["dev"] = dev.ToJson();
    j["test"] = test.ToJson();
  } else {
    j["error"] = error;
  }
  return j;
}

LayerReport LayerReport::FromJson(const nlohmann::json& j) {
  LayerReport r;
  r.source = j.at("source").get<std::string>();
  r.layer = j.at("layer").get<int>();
  r.task = ParseTask(j.at("task").get<std::string>());
  r.ok = j.at("ok").get<bool>();
  r.best_epoch = j.value("best_epoch", 0);
  r.epochs_run = j.value("epochs_run", 0);
  r.fallback_tokens = j.value("fallback_tokens", std::size_t{0});
  r.wallclock_s = j.value("wallclock_s", 0.0);
  r.epoch_log = j.value("epoch_log", "");
  if (r.ok) {
    r.dev = EvalReport::FromJson(j.at("dev"));
    r.test = EvalReport::FromJson(j.at("test"));
  } else {
    r.error = j.value("error", "");
  }
  return r;
}

LayerReport RunLayer(const PreparedData& data, const FeatureStore& store,
                     const std::string& source, std::uint32_t layer, Task task,
                     const TrainConfig& train_config, const PoolingOptions& pooling,
                     const std::filesystem::path& output_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  LayerReport report;
  report.source = source;
  report.layer = static_cast<int>(layer);
  report.task = task;
  try {
    ProbeDataset train =
        BuildProbeDataset(data.splits.train, store, layer, task, &data.vocab, pooling);
    ProbeDataset dev = BuildProbeDataset(data.splits.dev, store, layer, task, &data.vocab, pooling);
    ProbeDataset test =
        BuildProbeDataset(data.splits.test, store, layer, task, &data.vocab, pooling);
    report.fallback_tokens = train.fallback_tokens + dev.fallback_tokens + test.fallback_tokens;

    TrainResult trained = Train(train, dev, train_config);
    report.best_epoch = trained.state.best_epoch;
    report.epochs_run = trained.state.epochs_run;
    report.dev = Evaluate(PredictFeatures(trained.model, dev.X), dev.y, dev.oov, data.vocab);
    report.test = Evaluate(PredictFeatures(trained.model, test.X), test.y, test.oov, data.vocab);

    if (!output_dir.empty()) {
      const std::string stem = "layer_" + std::to_string(layer);
      const std::filesystem::path rel = std::filesystem::path(source) / (stem + "_epochs.csv");
      WriteFileAtomic(output_dir / rel, EpochLogCsv(trained.state.log));
      SaveModel(output_dir / source / (stem + ".spm"), trained.model, train_config, trained.state);
      report.epoch_log = rel.string();
    }
    report.ok = true;
  } catch (const std::exception& e) {
    report.ok = false;
    report.error = e.what();
  }
  report.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string SummaryCsv(const std::vector<LayerReport>& reports) {
  std::string out = "source,layer,task,dev_acc,test_acc\n";
  for (const LayerReport& r : reports) {
    if (!r.ok) continue;
    out += r.source + "," + std::to_string(r.layer) + "," + TaskName(r.task) + "," +
           FormatDecimals(r.dev.accuracy, 6) + "," + FormatDecimals(r.test.accuracy, 6) + "\n";
  }
  return out;
}

int SelectBestLayer(const std::vector<LayerReport>& reports, const std::string& source) {
  int best = -1;
  double best_acc = -1.0;
  for (const LayerReport& r : reports) {
    if (!r.ok || r.source != source) continue;
    if (r.dev.accuracy > best_acc || (r.dev.accuracy == best_acc && r.layer < best)) {
      best = r.layer;
      best_acc = r.dev.accuracy;
    }
  }
  return best;
}

std::map<std::string, int> EmitReport(const std::vector<LayerReport>& reports,
                                      const std::filesystem::path& output_dir) {
  if (reports.empty()) throw std::invalid_argument("EmitReport: no layer reports");
  std::filesystem::create_directories(output_dir);
  WriteFileAtomic(output_dir / "summary.csv", SummaryCsv(reports));

  std::vector<std::string> sources;
  for (const LayerReport& r : reports) {
    WriteFileAtomic(output_dir / r.source / ("layer_" + std::to_string(r.layer) + ".json"),
                    r.ToJson().dump(2) + "\n");
    if (std::find(sources.begin(), sources.end(), r.source) == sources.end())
      sources.push_back(r.source);
  }

  std::map<std::string, int> best;
  nlohmann::json best_json = nlohmann::json::object();
  for (const std::string& source : sources) {
    const int layer = SelectBestLayer(reports, source);
    best[source] = layer;
    best_json[source] = layer;
    if (layer < 0) continue;
    for (const LayerReport& r : reports) {
      if (r.ok && r.source == source && r.layer == layer) {
        WriteFileAtomic(output_dir / (source + "_best_per_label.csv"), r.test.PerLabelCsv());
        break;
      }
    }
  }
  WriteFileAtomic(output_dir / "best_layers.json", best_json.dump(2) + "\n");
  return best;
}

std::vector<LayerReport> LoadLayerReports(const std::filesystem::path& output_dir) {
  std::vector<LayerReport> reports;
  if (!std::filesystem::is_directory(output_dir))
    throw DataError("not a sweep directory: " + output_dir.string());
  const std::regex pattern(R"(layer_\d+\.json)");
  for (const auto& source_dir : std::filesystem::directory_iterator(output_dir)) {
    if (!source_dir.is_directory()) continue;
    for (const auto& f : std::filesystem::directory_iterator(source_dir.path())) {
      if (!std::regex_match(f.path().filename().string(), pattern)) continue;
      try {
        reports.push_back(LayerReport::FromJson(nlohmann::json::parse(ReadFile(f.path()))));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(f.path().string() + ": " + e.what());
      }
    }
  }
  std::sort(reports.begin(), reports.end(), [](const LayerReport& a, const LayerReport& b) {
    const bool a_pre = a.source == kPretrainedSource, b_pre = b.source == kPretrainedSource;
    if (a_pre != b_pre) return a_pre;
    if (a.source != b.source) return a.source < b.source;
    return a.layer < b.layer;
  });
  return reports;
}

std::filesystem::path ResolveCacheDir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("SYNTAXPROBE_CACHE_DIR"); env && *env) return env;
  return fallback;
}

SweepResult RunLayerSweep(const SweepConfig& config) {
  if (config.layers && config.layers->empty())
    throw std::invalid_argument("sweep: empty layer list");
  if (config.jobs < 1) throw std::invalid_argument("sweep: jobs must be positive");
  config.train.Validate();

  std::vector<std::pair<std::string, FeatureStore>> sources;
  sources.emplace_back(kPretrainedSource, FeatureStore(config.manifest_path));
  if (config.baseline_manifest)
    sources.emplace_back(kBaselineSource, FeatureStore(*config.baseline_manifest));

  std::vector<std::uint32_t> layers;
  if (config.layers) {
    layers = *config.layers;
  } else {
    for (std::uint32_t l = 0; l < sources.front().second.manifest().layer_count(); ++l)
      layers.push_back(l);
  }
  if (layers.empty()) throw std::invalid_argument("sweep: manifest has no layers");
  for (const auto& [name, store] : sources) {
    const std::uint32_t available = store.manifest().layer_count();
    for (std::uint32_t l : layers)
      if (l >= available)
        throw std::invalid_argument("sweep: layer " + std::to_string(l) + " outside " + name +
                                    " manifest layer_count " + std::to_string(available));
  }

  std::set<std::string> tags;
  if (config.tagset_path) tags = ReadTagsetFile(config.tagset_path->string());
  const Treebank treebank = ReadTreebankFile(config.treebank_path.string());
  const PreparedData data = PrepareData(treebank, config.task, config.split, tags);
  std::filesystem::create_directories(config.output_dir);
  WriteFileAtomic(config.output_dir / "filter_log.jsonl", data.filter_log.ToJsonLines());

  struct Job {
    std::size_t source;
    std::uint32_t layer;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sources.size(); ++s)
    for (std::uint32_t l : layers) jobs.push_back({s, l});

  SweepResult result;
  result.reports.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& [name, store] = sources[jobs[i].source];
      result.reports[i] = RunLayer(data, store, name, jobs[i].layer, config.task, config.train,
                                   config.pooling, config.output_dir);
      if (!result.reports[i].ok) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "layer " << jobs[i].layer << " (" << name
                  << ") failed: " << result.reports[i].error << "\n";
      }
    }
  };
  const int n_threads = std::min<int>(config.jobs, static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  result.best_layers = EmitReport(result.reports, config.output_dir);
  return result;
}

}  // namespace syntaxprobe
