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

#ifndef SYNTAXPROBE_POOLING_H_
#define SYNTAXPROBE_POOLING_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syntaxprobe/deplabel.h"
#include "syntaxprobe/featurestore.h"
#include "syntaxprobe/treebank.h"

namespace syntaxprobe {

enum class Task { kPos, kDep };

const char* TaskName(Task task);
Task ParseTask(const std::string& name);
inline LabelKind LabelKindFor(Task task) {
  return task == Task::kPos ? LabelKind::kPos : LabelKind::kDep;
}

// Frames f in [0, frame_count) whose center f*hop + window/2 lies in
// [start_s, end_s). When none does, the single frame whose center is nearest
// the span midpoint (ties to the lower index).
std::vector<std::size_t> FramesInSpan(double start_s, double end_s, double hop_s,
                                      double window_s, std::size_t frame_count,
                                      bool* used_fallback = nullptr);

// Coordinate-wise mean of the selected rows, summed in index order in double
// precision. Throws std::invalid_argument on an empty selection.
std::vector<float> PoolToken(const FrameMatrix& frames, std::span<const std::size_t> rows);

// Gold labels for every token of the treebank, in corpus order: the POS tag,
// or the formatted relative head offset.
std::vector<std::string> TaskLabels(const Treebank& treebank, Task task);

struct RowMeta {
  std::string utterance_id;
  int token_index = 0;
};

struct ProbeDataset {
  FrameMatrix X;                // N x D pooled token vectors
  std::vector<int> y;           // class ids, kOovId for unseen labels
  std::vector<char> oov;        // 1 where the gold label is outside the vocab
  std::vector<RowMeta> meta;
  LabelVocab vocab;
  int layer = 0;
  std::size_t fallback_tokens = 0;  // tokens pooled via nearest-frame fallback

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
};

struct PoolingOptions {
  // Allowed |T_file - expected_frame_count| before a DataError.
  long long frame_tolerance = 1;
  // Z-score every column with this dataset's own statistics. Off by default.
  bool standardize = false;
  // Directory for pooled-vector caches; empty disables caching.
  std::filesystem::path cache_dir;
};

// One row per token of `split`, in corpus order. `vocab` may be null, in
// which case it is built from this split's labels (use for training splits).
ProbeDataset BuildProbeDataset(const Treebank& split, const FeatureStore& store,
                               std::uint32_t layer, Task task, const LabelVocab* vocab,
                               const PoolingOptions& options = {});

// Column standardization in place (zero mean, unit variance; constant columns
// are only centered).
void StandardizeColumns(FrameMatrix& X);

// Pooled-vector cache: one featurestore file (L=1, T=N rows) per key with a
// JSON sidecar recording the key fields.
class PooledCache {
 public:
  explicit PooledCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  struct Key {
    std::string treebank_hash;
    std::string features_hash;
    std::uint32_t layer = 0;
    Task task = Task::kPos;
    std::string vocab_hash;
    std::string Digest() const;
  };

  std::optional<FrameMatrix> Load(const Key& key, std::size_t* fallback_tokens) const;
  void Store(const Key& key, const FrameMatrix& X, std::size_t fallback_tokens) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_POOLING_H_
