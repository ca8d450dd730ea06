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

#include "syntaxprobe/pooling.h"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "json.hpp"
#include "syntaxprobe/util.h"

namespace syntaxprobe {

const char* TaskName(Task task) { return task == Task::kPos ? "pos" : "dep"; }

Task ParseTask(const std::string& name) {
  if (name == "pos") return Task::kPos;
  if (name == "dep") return Task::kDep;
  throw std::invalid_argument("unknown task '" + name + "' (expected pos|dep)");
}

std::vector<std::size_t> FramesInSpan(double start_s, double end_s, double hop_s,
                                      double window_s, std::size_t frame_count,
                                      bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  std::vector<std::size_t> out;
  if (frame_count == 0) return out;
  const double half = window_s / 2.0;
  auto center = [&](std::size_t f) { return static_cast<double>(f) * hop_s + half; };

  // Start one frame early and scan; the membership test below is the rule.
  double first = std::floor((start_s - half) / hop_s) - 1.0;
  std::size_t f = first <= 0.0 ? 0 : static_cast<std::size_t>(first);
  for (; f < frame_count; ++f) {
    const double c = center(f);
    if (c >= end_s) break;
    if (c >= start_s) out.push_back(f);
  }
  if (!out.empty()) return out;

  if (used_fallback) *used_fallback = true;
  const double mid = (start_s + end_s) / 2.0;
  double guess = std::round((mid - half) / hop_s);
  const double last = static_cast<double>(frame_count - 1);
  guess = std::clamp(guess, 0.0, last);
  std::size_t g = static_cast<std::size_t>(guess);
  std::size_t best = g;
  double best_dist = std::abs(center(g) - mid);
  const std::size_t lo = g == 0 ? 0 : g - 1;
  const std::size_t hi = std::min(g + 1, frame_count - 1);
  for (std::size_t k = lo; k <= hi; ++k) {
    const double d = std::abs(center(k) - mid);
    if (d < best_dist || (d == best_dist && k < best)) {
      best = k;
      best_dist = d;
    }
  }
  out.push_back(best);
  return out;
}

std::vector<float> PoolToken(const FrameMatrix& frames, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("PoolToken: empty frame list");
  const Eigen::Index dim = frames.cols();
  std::vector<double> acc(dim, 0.0);
  for (std::size_t r : rows) {
    if (r >= static_cast<std::size_t>(frames.rows()))
      throw std::out_of_range("PoolToken: frame index out of range");
    const float* row = frames.data() + r * dim;
    for (Eigen::Index d = 0; d < dim; ++d) acc[d] += row[d];
  }
  std::vector<float> out(dim);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (Eigen::Index d = 0; d < dim; ++d) out[d] = static_cast<float>(acc[d] * inv);
  return out;
}

std::vector<std::string> TaskLabels(const Treebank& treebank, Task task) {
  std::vector<std::string> labels;
  labels.reserve(treebank.token_count());
  for (const Utterance& u : treebank.utterances) {
    if (task == Task::kPos) {
      for (const Token& t : u.tokens) labels.push_back(t.pos);
    } else {
      std::vector<int> heads = u.heads();
      for (int rel : EncodeRelativeHeads(heads, heads.size()))
        labels.push_back(FormatRelLabel(rel));
    }
  }
  return labels;
}

void StandardizeColumns(FrameMatrix& X) {
  if (X.rows() == 0) return;
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) mean += X(r, c);
    mean /= n;
    double var = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double d = X(r, c) - mean;
      var += d * d;
    }
    var /= n;
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      X(r, c) = static_cast<float>((X(r, c) - mean) * scale);
  }
}

namespace {

FrameMatrix PoolSplit(const Treebank& split, const FeatureStore& store, std::uint32_t layer,
                      const PoolingOptions& options, std::size_t* fallback_tokens) {
  const std::size_t n = split.token_count();
  FrameMatrix X;
  std::size_t row = 0;
  *fallback_tokens = 0;
  for (const Utterance& u : split.utterances) {
    const ManifestEntry& e = store.entry(u.audio_ref);
    FrameMatrix frames = store.ReadLayer(u.audio_ref, layer);
    const long long expected =
        ExpectedFrameCount(e.duration_s, e.frame_hop_s, e.frame_window_s);
    if (std::llabs(static_cast<long long>(frames.rows()) - expected) > options.frame_tolerance)
      throw DataError("utterance '" + u.id + "': feature file has " +
                      std::to_string(frames.rows()) + " frames, expected " +
                      std::to_string(expected));
    if (frames.rows() == 0) throw DataError("utterance '" + u.id + "': no frames");
    if (X.size() == 0) X.resize(static_cast<Eigen::Index>(n), frames.cols());
    if (frames.cols() != X.cols())
      throw DataError("utterance '" + u.id + "': feature dim differs from corpus");
    for (const Token& t : u.tokens) {
      bool fallback = false;
      std::vector<std::size_t> idx =
          FramesInSpan(t.start_time, t.end_time, e.frame_hop_s, e.frame_window_s,
                       static_cast<std::size_t>(frames.rows()), &fallback);
      if (fallback) ++*fallback_tokens;
      std::vector<float> v = PoolToken(frames, idx);
      std::copy(v.begin(), v.end(), X.row(static_cast<Eigen::Index>(row)).data());
      ++row;
    }
  }
  return X;
}

}  // namespace

ProbeDataset BuildProbeDataset(const Treebank& split, const FeatureStore& store,
                               std::uint32_t layer, Task task, const LabelVocab* vocab,
                               const PoolingOptions& options) {
  ProbeDataset ds;
  ds.layer = static_cast<int>(layer);
  std::vector<std::string> labels = TaskLabels(split, task);
  if (labels.empty()) throw DataError("cannot build a dataset from an empty split");
  ds.vocab = vocab ? *vocab : BuildLabelVocab(labels, LabelKindFor(task));
  MappedLabels mapped = MapLabels(labels, ds.vocab);
  ds.y = std::move(mapped.ids);
  ds.oov = std::move(mapped.oov);
  for (const Utterance& u : split.utterances)
    for (const Token& t : u.tokens) ds.meta.push_back({u.id, t.index});

  std::optional<PooledCache> cache;
  PooledCache::Key key;
  if (!options.cache_dir.empty()) {
    cache.emplace(options.cache_dir);
    key = {split.Hash(), store.Hash(), layer, task, ds.vocab.Hash()};
    if (auto cached = cache->Load(key, &ds.fallback_tokens)) {
      ds.X = std::move(*cached);
    }
  }
  if (ds.X.size() == 0) {
    ds.X = PoolSplit(split, store, layer, options, &ds.fallback_tokens);
    if (cache) cache->Store(key, ds.X, ds.fallback_tokens);
  }
  if (static_cast<std::size_t>(ds.X.rows()) != ds.y.size())
    throw DataError("pooled row count disagrees with token count");
  if (options.standardize) StandardizeColumns(ds.X);
  return ds;
}

std::string PooledCache::Key::Digest() const {
  Fnv1a h;
  h.Update(treebank_hash + "|" + features_hash + "|" + std::to_string(layer) + "|" +
           TaskName(task) + "|" + vocab_hash);
  return h.hex();
}

std::optional<FrameMatrix> PooledCache::Load(const Key& key,
                                             std::size_t* fallback_tokens) const {
  const std::string digest = key.Digest();
  const auto bin = dir_ / (digest + ".spb");
  const auto side = dir_ / (digest + ".json");
  if (!std::filesystem::exists(bin) || !std::filesystem::exists(side)) return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(ReadFile(side));
    if (j.at("treebank_hash") != key.treebank_hash || j.at("vocab_hash") != key.vocab_hash ||
        j.at("features_hash") != key.features_hash || j.at("layer") != key.layer ||
        j.at("task") != TaskName(key.task))
      return std::nullopt;
    FrameMatrix X = ReadLayer(bin, 0);
    *fallback_tokens = j.at("fallback_tokens").get<std::size_t>();
    return X;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable cache entries are recomputed
  }
}

void PooledCache::Store(const Key& key, const FrameMatrix& X, std::size_t fallback_tokens) const {
  const std::string digest = key.Digest();
  FeatureTensor t(1, static_cast<std::uint32_t>(X.rows()), static_cast<std::uint32_t>(X.cols()));
  std::copy(X.data(), X.data() + X.size(), t.data.begin());
  WriteFeatureFile(dir_ / (digest + ".spb"), t);
  nlohmann::json j = {{"treebank_hash", key.treebank_hash},
                      {"features_hash", key.features_hash},
                      {"layer", key.layer},
                      {"task", TaskName(key.task)},
                      {"vocab_hash", key.vocab_hash},
                      {"rows", X.rows()},
                      {"dim", X.cols()},
                      {"fallback_tokens", fallback_tokens}};
  WriteFileAtomic(dir_ / (digest + ".json"), j.dump(2) + "\n");
}

}  // namespace syntaxprobe
