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

#ifndef SYNTAXPROBE_DEPLABEL_H_
#define SYNTAXPROBE_DEPLABEL_H_

#include <map>
#include <span>
#include <string>
#include <vector>

namespace syntaxprobe {

// Relative head position labels: head - index for attached tokens, 0 for the
// root. A head array for n tokens uses 0 for root and 1..n otherwise.
std::vector<int> EncodeRelativeHeads(std::span<const int> heads, std::size_t n);

enum class RepairPolicy {
  // Arithmetic inverse only; out-of-range or self-pointing offsets become 0.
  kNone,
  // As kNone, then force exactly one root: token 1 when no root decoded,
  // otherwise every root but the leftmost is attached to the leftmost.
  kRootFallback,
};

struct DecodedHeads {
  std::vector<int> heads;
  // Number of tokens whose head was changed by repair (out-of-range offsets
  // included). Zero means the labels were a well-formed encoding.
  int repairs = 0;
};

DecodedHeads DecodeRelativeHeads(std::span<const int> labels, std::size_t n,
                                 RepairPolicy policy = RepairPolicy::kRootFallback);

// "+3", "0", "-1".
std::string FormatRelLabel(int value);
int ParseRelLabel(const std::string& text);

enum class LabelKind { kPos, kDep };

// Class id for labels absent from the vocabulary.
inline constexpr int kOovId = -1;

// Sorted label inventory built from a training split. POS labels sort
// lexicographically; dep labels sort by numeric value.
class LabelVocab {
 public:
  LabelVocab() = default;
  LabelVocab(LabelKind kind, std::vector<std::string> labels,
             std::vector<std::size_t> counts);

  LabelKind kind() const { return kind_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::string& label(int id) const { return labels_.at(id); }
  // kOovId when absent.
  int id(const std::string& label) const;
  std::string Hash() const;

  bool operator==(const LabelVocab& o) const {
    return kind_ == o.kind_ && labels_ == o.labels_;
  }

 private:
  LabelKind kind_ = LabelKind::kPos;
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
  std::map<std::string, int> index_;
};

// Throws std::invalid_argument on an empty label list.
LabelVocab BuildLabelVocab(std::span<const std::string> labels, LabelKind kind);

struct MappedLabels {
  std::vector<int> ids;    // kOovId where oov[i]
  std::vector<char> oov;
  std::size_t oov_count() const;
};

MappedLabels MapLabels(std::span<const std::string> labels, const LabelVocab& vocab);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_DEPLABEL_H_
