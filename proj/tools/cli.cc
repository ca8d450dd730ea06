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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "syntaxprobe/featurestore.h"
#include "syntaxprobe/metrics.h"
#include "syntaxprobe/pooling.h"
#include "syntaxprobe/probe.h"
#include "syntaxprobe/runner.h"
#include "syntaxprobe/treebank.h"
#include "syntaxprobe/util.h"

namespace syntaxprobe {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

SplitSpec ParseRatios(const std::string& text, std::uint64_t seed) {
  std::vector<std::string_view> parts = Split(text, ',');
  if (parts.size() != 3) throw UsageError("--ratios expects three comma-separated fractions");
  double f[3];
  for (int i = 0; i < 3; ++i)
    if (!ParseDecimal(parts[i], &f[i])) throw UsageError("bad ratio '" + std::string(parts[i]) + "'");
  SplitSpec spec{f[0], f[1], f[2], seed};
  spec.Validate();
  return spec;
}

std::vector<std::uint32_t> ParseLayers(const std::string& text) {
  std::vector<std::uint32_t> layers;
  if (text.empty()) return layers;
  for (std::string_view part : Split(text, ',')) {
    std::size_t dash = part.find('-');
    long long lo, hi;
    if (dash == std::string_view::npos) {
      if (!ParseInt(part, &lo) || lo < 0) throw UsageError("bad layer '" + std::string(part) + "'");
      hi = lo;
    } else if (!ParseInt(part.substr(0, dash), &lo) || !ParseInt(part.substr(dash + 1), &hi) ||
               lo < 0 || hi < lo) {
      throw UsageError("bad layer range '" + std::string(part) + "'");
    }
    for (long long l = lo; l <= hi; ++l) layers.push_back(static_cast<std::uint32_t>(l));
  }
  return layers;
}

struct TrainFlags {
  double lr = -1.0;  // negative: per-task default
  double momentum = 0.99;
  std::size_t batch = 1024;
  int patience = 10;
  double min_delta = 0.0001;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
  bool no_nesterov = false;

  void Register(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "Learning rate (default 0.005 pos, 0.001 dep)");
    cmd->add_option("--momentum", momentum, "Momentum coefficient")->capture_default_str();
    cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stopping patience in epochs")->capture_default_str();
    cmd->add_option("--min-delta", min_delta, "Minimum dev-accuracy improvement")->capture_default_str();
    cmd->add_option("--max-epochs", max_epochs, "Epoch cap")->capture_default_str();
    cmd->add_option("--train-seed", seed, "Shuffling seed")->capture_default_str();
    cmd->add_flag("--no-nesterov", no_nesterov, "Use classical momentum");
  }

  TrainConfig Build(Task task) const {
    TrainConfig c = TrainConfig::ForTask(task);
    if (lr > 0.0) c.learning_rate = lr;
    c.momentum = momentum;
    c.batch_size = batch;
    c.patience_epochs = patience;
    c.min_delta = min_delta;
    c.max_epochs = max_epochs;
    c.seed = seed;
    c.nesterov = !no_nesterov;
    try {
      c.Validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct SplitFiles {
  Treebank train, dev, test;
};

SplitFiles ReadSplitDir(const fs::path& dir) {
  return {ReadTreebankFile((dir / "train.conllu").string()),
          ReadTreebankFile((dir / "dev.conllu").string()),
          ReadTreebankFile((dir / "test.conllu").string())};
}

int CmdValidate(const std::string& treebank_path, const std::string& tagset_path,
                const std::string& log_path, const std::string& out_path, std::ostream& out) {
  std::set<std::string> tags;
  if (!tagset_path.empty()) tags = ReadTagsetFile(tagset_path);
  Treebank tb = ReadTreebankFile(treebank_path);
  FilterResult result = FilterTreebank(tb, tags);
  if (!log_path.empty()) WriteFileAtomic(log_path, result.log.ToJsonLines());
  if (!out_path.empty()) WriteTreebankFile(out_path, result.kept);
  out << "utterances: " << tb.utterances.size() << "\n"
      << "kept: " << result.kept.utterances.size() << "\n"
      << "discarded: " << result.log.discarded.size() << "\n";
  for (const FilterLogEntry& e : result.log.discarded) {
    out << "  " << e.id << ":";
    for (const Violation& v : e.violations) out << " " << ViolationKindName(v.kind);
    out << "\n";
  }
  return kExitOk;
}

int CmdSplit(const std::string& treebank_path, const std::string& tagset_path,
             const SplitSpec& spec, const fs::path& out_dir, std::ostream& out) {
  std::set<std::string> tags;
  if (!tagset_path.empty()) tags = ReadTagsetFile(tagset_path);
  FilterResult filtered = FilterTreebank(ReadTreebankFile(treebank_path), tags);
  TreebankSplits splits = SplitDataset(filtered.kept, spec);
  fs::create_directories(out_dir);
  WriteTreebankFile((out_dir / "train.conllu").string(), splits.train);
  WriteTreebankFile((out_dir / "dev.conllu").string(), splits.dev);
  WriteTreebankFile((out_dir / "test.conllu").string(), splits.test);
  WriteFileAtomic(out_dir / "filter_log.jsonl", filtered.log.ToJsonLines());
  out << "train: " << splits.train.utterances.size() << " utterances, "
      << splits.train.token_count() << " tokens\n"
      << "dev: " << splits.dev.utterances.size() << " utterances, " << splits.dev.token_count()
      << " tokens\n"
      << "test: " << splits.test.utterances.size() << " utterances, "
      << splits.test.token_count() << " tokens\n";
  return kExitOk;
}

LabelVocab TrainVocab(const Treebank& train, Task task) {
  std::vector<std::string> labels = TaskLabels(train, task);
  if (labels.empty()) throw DataError("training split has no tokens");
  return BuildLabelVocab(labels, LabelKindFor(task));
}

int CmdPool(const fs::path& split_dir, const fs::path& manifest, std::uint32_t layer, Task task,
            const fs::path& cache_dir, std::ostream& out) {
  SplitFiles s = ReadSplitDir(split_dir);
  FeatureStore store(manifest);
  LabelVocab vocab = TrainVocab(s.train, task);
  PoolingOptions opts;
  opts.cache_dir = cache_dir;
  const std::pair<const char*, const Treebank*> parts[] = {
      {"train", &s.train}, {"dev", &s.dev}, {"test", &s.test}};
  for (const auto& [name, tb] : parts) {
    ProbeDataset ds = BuildProbeDataset(*tb, store, layer, task, &vocab, opts);
    std::size_t oov = static_cast<std::size_t>(std::count(ds.oov.begin(), ds.oov.end(), 1));
    out << name << ": " << ds.size() << " rows, dim " << ds.dim() << ", " << oov << " oov, "
        << ds.fallback_tokens << " fallback tokens\n";
  }
  out << "cache: " << cache_dir.string() << "\n";
  return kExitOk;
}

int CmdTrain(const fs::path& split_dir, const fs::path& manifest, std::uint32_t layer, Task task,
             const TrainConfig& config, const fs::path& out_dir, const fs::path& cache_dir,
             std::ostream& out) {
  SplitFiles s = ReadSplitDir(split_dir);
  FeatureStore store(manifest);
  PreparedData data;
  data.splits = {std::move(s.train), std::move(s.dev), std::move(s.test)};
  data.vocab = TrainVocab(data.splits.train, task);
  PoolingOptions opts;
  opts.cache_dir = cache_dir;
  LayerReport report = RunLayer(data, store, kPretrainedSource, layer, task, config, opts, out_dir);
  if (!report.ok) throw DataError("layer " + std::to_string(layer) + ": " + report.error);
  WriteFileAtomic(out_dir / kPretrainedSource / ("layer_" + std::to_string(layer) + ".json"),
                  report.ToJson().dump(2) + "\n");
  out << "layer " << layer << " task " << TaskName(task) << ": best epoch " << report.best_epoch
      << " of " << report.epochs_run << ", dev_acc " << FormatDecimals(report.dev.accuracy, 6)
      << ", test_acc " << FormatDecimals(report.test.accuracy, 6) << "\n";
  return kExitOk;
}

void PrintSummary(const std::vector<LayerReport>& reports,
                  const std::map<std::string, int>& best, std::ostream& out) {
  out << SummaryCsv(reports);
  for (const LayerReport& r : reports)
    if (!r.ok) out << "# failed: " << r.source << " layer " << r.layer << ": " << r.error << "\n";
  for (const auto& [source, layer] : best) out << "# best " << source << " layer: " << layer << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-wise linear probes for syntax in speech encoder representations",
               "syntaxprobe"};
  app.require_subcommand(1);

  std::string treebank, tagset, log_path, filtered_out, ratios = "0.8,0.1,0.1";
  std::string manifest, baseline, task_name = "pos", layers_text, split_dir, out_dir;
  std::uint64_t split_seed = 0;
  std::uint32_t layer = 0;
  int jobs = 1;
  bool standardize = false;
  TrainFlags train_flags;

  auto* validate = app.add_subcommand("validate", "Check a treebank and report discarded utterances");
  validate->add_option("--treebank", treebank, "CoNLL-U treebank with timecodes")->required();
  validate->add_option("--tagset", tagset, "Allowed POS tags, one per line");
  validate->add_option("--log", log_path, "Write the filter log (JSON lines)");
  validate->add_option("--out", filtered_out, "Write the retained utterances");

  auto* split = app.add_subcommand("split", "Filter and split a treebank into train/dev/test");
  split->add_option("--treebank", treebank)->required();
  split->add_option("--tagset", tagset);
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("--ratios", ratios)->capture_default_str();
  split->add_option("--out", out_dir, "Output directory for {train,dev,test}.conllu")->required();

  auto* pool = app.add_subcommand("pool", "Pool token vectors for one layer into the cache");
  pool->add_option("--split-dir", split_dir)->required();
  pool->add_option("--manifest", manifest)->required();
  pool->add_option("--layer", layer)->required();
  pool->add_option("--task", task_name)->check(CLI::IsMember({"pos", "dep"}))->capture_default_str();
  pool->add_option("--cache-dir", out_dir, "Cache directory (default $SYNTAXPROBE_CACHE_DIR or ./cache)");

  auto* train = app.add_subcommand("train", "Train and evaluate a probe on one layer");
  train->add_option("--split-dir", split_dir)->required();
  train->add_option("--manifest", manifest)->required();
  train->add_option("--layer", layer)->required();
  train->add_option("--task", task_name)->check(CLI::IsMember({"pos", "dep"}))->capture_default_str();
  train->add_option("--out", out_dir)->required();
  train_flags.Register(train);

  auto* sweep = app.add_subcommand("sweep", "Probe every layer and emit per-layer reports");
  sweep->add_option("--treebank", treebank)->required();
  sweep->add_option("--manifest", manifest)->required();
  sweep->add_option("--task", task_name)->check(CLI::IsMember({"pos", "dep"}))->capture_default_str();
  sweep->add_option("--baseline-manifest", baseline, "Features from a randomly re-initialized encoder");
  sweep->add_option("--tagset", tagset);
  sweep->add_option("--layers", layers_text, "Comma list or ranges, e.g. 0-24 (default: all)");
  sweep->add_option("--seed", split_seed, "Split seed")->capture_default_str();
  sweep->add_option("--ratios", ratios)->capture_default_str();
  sweep->add_option("--jobs", jobs, "Layers trained concurrently")->capture_default_str();
  sweep->add_flag("--standardize", standardize, "Z-score pooled features per dataset");
  sweep->add_option("--out", out_dir)->required();
  train_flags.Register(sweep);

  auto* report = app.add_subcommand("report", "Re-emit summary and best-layer files of a sweep");
  report->add_option("--sweep-dir", out_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const Task task = ParseTask(task_name);
    if (*validate) return CmdValidate(treebank, tagset, log_path, filtered_out, out);
    if (*split) return CmdSplit(treebank, tagset, ParseRatios(ratios, split_seed), out_dir, out);
    if (*pool)
      return CmdPool(split_dir, manifest, layer, task,
                     out_dir.empty() ? ResolveCacheDir("cache") : fs::path(out_dir), out);
    if (*train)
      return CmdTrain(split_dir, manifest, layer, task, train_flags.Build(task), out_dir,
                      ResolveCacheDir(fs::path(out_dir) / "cache"), out);
    if (*sweep) {
      SweepConfig cfg;
      cfg.task = task;
      if (!layers_text.empty()) cfg.layers = ParseLayers(layers_text);
      cfg.train = train_flags.Build(task);
      cfg.split = ParseRatios(ratios, split_seed);
      cfg.treebank_path = treebank;
      cfg.manifest_path = manifest;
      if (!baseline.empty()) cfg.baseline_manifest = baseline;
      if (!tagset.empty()) cfg.tagset_path = tagset;
      cfg.output_dir = out_dir;
      cfg.pooling.cache_dir = ResolveCacheDir(fs::path(out_dir) / "cache");
      cfg.pooling.standardize = standardize;
      cfg.jobs = jobs;
      SweepResult result = RunLayerSweep(cfg);
      PrintSummary(result.reports, result.best_layers, out);
      return kExitOk;
    }
    if (*report) {
      std::vector<LayerReport> reports = LoadLayerReports(out_dir);
      if (reports.empty()) throw DataError("no layer reports under " + out_dir);
      PrintSummary(reports, EmitReport(reports, out_dir), out);
      return kExitOk;
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace syntaxprobe
