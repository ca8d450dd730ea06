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

#include "syntaxprobe/deplabel.h"

#include <algorithm>
#include <stdexcept>

#include "syntaxprobe/util.h"

namespace syntaxprobe {

std::vector<int> EncodeRelativeHeads(std::span<const int> heads, std::size_t n) {
  if (heads.size() != n)
    throw std::invalid_argument("EncodeRelativeHeads: " + std::to_string(heads.size()) +
                                " heads for length " + std::to_string(n));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int position = static_cast<int>(i) + 1;
    labels[i] = heads[i] == 0 ? 0 : heads[i] - position;
  }
  return labels;
}

DecodedHeads DecodeRelativeHeads(std::span<const int> labels, std::size_t n,
                                 RepairPolicy policy) {
  if (labels.size() != n)
    throw std::invalid_argument("DecodeRelativeHeads: length mismatch");
  DecodedHeads out;
  out.heads.assign(n, 0);
  const long long len = static_cast<long long>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    const long long position = static_cast<long long>(i) + 1;
    const long long head = position + labels[i];
    if (head >= 1 && head <= len && head != position) {
      out.heads[i] = static_cast<int>(head);
    } else {
      ++out.repairs;  // stays 0
    }
  }
  if (policy == RepairPolicy::kNone || n == 0) return out;

  auto first_root = std::find(out.heads.begin(), out.heads.end(), 0);
  if (first_root == out.heads.end()) {
    out.heads[0] = 0;
    ++out.repairs;
    return out;
  }
  const int leftmost = static_cast<int>(first_root - out.heads.begin()) + 1;
  for (std::size_t i = leftmost; i < n; ++i) {
    if (out.heads[i] == 0) {
      out.heads[i] = leftmost;
      ++out.repairs;
    }
  }
  return out;
}

std::string FormatRelLabel(int value) {
  if (value > 0) return "+" + std::to_string(value);
  return std::to_string(value);
}

int ParseRelLabel(const std::string& text) {
  long long v;
  if (!ParseInt(text, &v)) throw std::invalid_argument("not a relative label: '" + text + "'");
  return static_cast<int>(v);
}

LabelVocab::LabelVocab(LabelKind kind, std::vector<std::string> labels,
                       std::vector<std::size_t> counts)
    : kind_(kind), labels_(std::move(labels)), counts_(std::move(counts)) {
  if (counts_.size() != labels_.size()) counts_.assign(labels_.size(), 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate label '" + labels_[i] + "'");
  }
}

int LabelVocab::id(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kOovId : it->second;
}

std::string LabelVocab::Hash() const {
  Fnv1a h;
  h.Update(kind_ == LabelKind::kPos ? "pos" : "dep");
  for (const std::string& l : labels_) {
    h.Update(l);
    h.Update("\n");
  }
  return h.hex();
}

LabelVocab BuildLabelVocab(std::span<const std::string> labels, LabelKind kind) {
  if (labels.empty()) throw std::invalid_argument("BuildLabelVocab: no labels");
  std::map<std::string, std::size_t> freq;
  for (const std::string& l : labels) ++freq[l];
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  if (kind == LabelKind::kDep) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return ParseRelLabel(a.first) < ParseRelLabel(b.first);
    });
  }
  std::vector<std::string> names;
  std::vector<std::size_t> counts;
  for (auto& [name, count] : entries) {
    names.push_back(name);
    counts.push_back(count);
  }
  return LabelVocab(kind, std::move(names), std::move(counts));
}

std::size_t MappedLabels::oov_count() const {
  return static_cast<std::size_t>(std::count(oov.begin(), oov.end(), 1));
}

MappedLabels MapLabels(std::span<const std::string> labels, const LabelVocab& vocab) {
  MappedLabels out;
  out.ids.reserve(labels.size());
  out.oov.reserve(labels.size());
  for (const std::string& l : labels) {
    int id = vocab.id(l);
    out.ids.push_back(id);
    out.oov.push_back(id == kOovId ? 1 : 0);
  }
  return out;
}

}  // namespace syntaxprobe
