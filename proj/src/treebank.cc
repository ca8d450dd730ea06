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

#include "syntaxprobe/treebank.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace syntaxprobe {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Parses "# key = value"; returns false for other comments.
bool ParseComment(std::string_view line, std::string_view key, std::string* value) {
  std::string_view body = Trim(line.substr(1));
  if (body.substr(0, key.size()) != key) return false;
  body = Trim(body.substr(key.size()));
  if (body.empty() || body.front() != '=') return false;
  *value = std::string(Trim(body.substr(1)));
  return true;
}

struct PendingUtterance {
  Utterance utt;
  bool has_id = false;
  bool has_audio = false;
  std::size_t first_line = 0;
};

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<int> Utterance::heads() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.head);
  return out;
}

std::size_t Treebank::token_count() const {
  std::size_t n = 0;
  for (const Utterance& u : utterances) n += u.size();
  return n;
}

void Treebank::RefreshTagset() {
  tagset.clear();
  for (const Utterance& u : utterances)
    for (const Token& t : u.tokens) tagset.insert(t.pos);
}

std::string Treebank::Hash() const {
  std::ostringstream ss;
  WriteTreebank(ss, *this);
  Fnv1a h;
  h.Update(ss.str());
  return h.hex();
}

Treebank ParseTreebank(std::istream& in, const ColumnLayout& layout) {
  Treebank tb;
  std::unordered_set<std::string> seen_ids;
  PendingUtterance pending;
  std::size_t line_no = 0;

  auto flush = [&](std::size_t at_line) {
    if (pending.utt.tokens.empty()) {
      if (pending.has_id)
        throw ParseError(at_line, "utterance '" + pending.utt.id + "' has no tokens");
      pending = PendingUtterance{};
      return;
    }
    if (!pending.has_id)
      throw ParseError(pending.first_line, "utterance without '# sent_id' comment");
    if (!pending.has_audio) pending.utt.audio_ref = pending.utt.id;
    tb.utterances.push_back(std::move(pending.utt));
    pending = PendingUtterance{};
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) {
      flush(line_no);
      continue;
    }
    if (line.front() == '#') {
      std::string value;
      if (ParseComment(line, "sent_id", &value)) {
        if (!pending.utt.tokens.empty())
          throw ParseError(line_no, "sent_id comment inside an utterance");
        if (value.empty()) throw ParseError(line_no, "empty sent_id");
        if (!seen_ids.insert(value).second)
          throw ParseError(line_no, "duplicate sent_id '" + value + "'");
        pending.utt.id = value;
        pending.has_id = true;
      } else if (ParseComment(line, "audio", &value)) {
        pending.utt.audio_ref = value;
        pending.has_audio = true;
      }
      continue;
    }

    std::vector<std::string_view> cols = Split(line, '\t');
    if (static_cast<int>(cols.size()) != layout.column_count)
      throw ParseError(line_no, "expected " + std::to_string(layout.column_count) +
                                    " tab-separated columns, found " +
                                    std::to_string(cols.size()));
    std::string_view id_col = cols[layout.id];
    if (id_col.find('-') != std::string_view::npos ||
        id_col.find('.') != std::string_view::npos)
      continue;  // multiword range or empty node
    if (pending.utt.tokens.empty()) pending.first_line = line_no;

    Token tok;
    long long v;
    if (!ParseInt(id_col, &v) || v < 1)
      throw ParseError(line_no, "invalid token ID '" + std::string(id_col) + "'");
    tok.index = static_cast<int>(v);
    if (!ParseInt(cols[layout.head], &v))
      throw ParseError(line_no, "non-numeric HEAD '" + std::string(cols[layout.head]) + "'");
    tok.head = static_cast<int>(v);
    tok.form = std::string(cols[layout.form]);
    tok.pos = std::string(cols[layout.pos]);

    bool has_start = false, has_end = false;
    for (std::string_view item : Split(cols[layout.misc], '|')) {
      std::size_t eq = item.find('=');
      if (eq == std::string_view::npos) continue;
      std::string_view key = item.substr(0, eq);
      std::string_view val = item.substr(eq + 1);
      if (key == layout.start_key) {
        if (!ParseDecimal(val, &tok.start_time))
          throw ParseError(line_no, "unparsable " + layout.start_key + " '" + std::string(val) + "'");
        has_start = true;
      } else if (key == layout.end_key) {
        if (!ParseDecimal(val, &tok.end_time))
          throw ParseError(line_no, "unparsable " + layout.end_key + " '" + std::string(val) + "'");
        has_end = true;
      }
    }
    if (!has_start) throw ParseError(line_no, "missing '" + layout.start_key + "=' in MISC");
    if (!has_end) throw ParseError(line_no, "missing '" + layout.end_key + "=' in MISC");
    pending.utt.tokens.push_back(std::move(tok));
  }
  flush(line_no + 1);
  tb.RefreshTagset();
  return tb;
}

Treebank ReadTreebankFile(const std::string& path, const ColumnLayout& layout) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open treebank: " + path);
  try {
    return ParseTreebank(in, layout);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()));
  }
}

void WriteTreebank(std::ostream& out, const Treebank& treebank) {
  for (const Utterance& u : treebank.utterances) {
    out << "# sent_id = " << u.id << '\n';
    if (u.audio_ref != u.id) out << "# audio = " << u.audio_ref << '\n';
    for (const Token& t : u.tokens) {
      out << t.index << '\t' << (t.form.empty() ? "_" : t.form) << "\t_\t"
          << t.pos << "\t_\t_\t" << t.head << "\t_\t_\t"
          << "start=" << FormatFixed(t.start_time)
          << "|end=" << FormatFixed(t.end_time) << '\n';
    }
    out << '\n';
  }
}

void WriteTreebankFile(const std::string& path, const Treebank& treebank) {
  std::ostringstream ss;
  WriteTreebank(ss, treebank);
  WriteFileAtomic(path, ss.str());
}

const char* ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kTimecodeOrder: return "timecode_order";
    case ViolationKind::kTimecodeReversed: return "timecode_reversed";
    case ViolationKind::kHeadOutOfRange: return "head_out_of_range";
    case ViolationKind::kRootCount: return "root_count";
    case ViolationKind::kCycle: return "cycle";
    case ViolationKind::kUnknownTag: return "unknown_tag";
    case ViolationKind::kIndexing: return "indexing";
  }
  return "unknown";
}

ValidationVerdict ValidateUtterance(const Utterance& u,
                                    const std::set<std::string>& allowed_tags) {
  ValidationVerdict verdict;
  auto add = [&](ViolationKind kind, int token, std::string msg) {
    verdict.violations.push_back({kind, token, std::move(msg)});
  };
  const int n = static_cast<int>(u.tokens.size());
  if (n == 0) {
    add(ViolationKind::kRootCount, 0, "empty utterance");
    return verdict;
  }

  bool indexed = true;
  for (int i = 0; i < n; ++i) {
    if (u.tokens[i].index != i + 1) {
      add(ViolationKind::kIndexing, u.tokens[i].index,
          "token at position " + std::to_string(i + 1) + " has index " +
              std::to_string(u.tokens[i].index));
      indexed = false;
    }
  }

  for (int i = 0; i < n; ++i) {
    const Token& t = u.tokens[i];
    if (!(t.start_time < t.end_time))
      add(ViolationKind::kTimecodeOrder, t.index,
          "start " + FormatFixed(t.start_time) + " >= end " + FormatFixed(t.end_time));
    else if (t.start_time < 0.0)
      add(ViolationKind::kTimecodeOrder, t.index, "negative start time");
    if (i + 1 < n && u.tokens[i + 1].start_time < t.start_time)
      add(ViolationKind::kTimecodeReversed, u.tokens[i + 1].index,
          "starts at " + FormatFixed(u.tokens[i + 1].start_time) +
              " before preceding token start " + FormatFixed(t.start_time));
  }

  int roots = 0;
  bool heads_in_range = true;
  for (const Token& t : u.tokens) {
    if (t.head < 0 || t.head > n || t.head == t.index) {
      add(ViolationKind::kHeadOutOfRange, t.index,
          "head " + std::to_string(t.head) + " invalid for length " + std::to_string(n));
      heads_in_range = false;
    }
    if (t.head == 0) ++roots;
  }
  if (roots != 1)
    add(ViolationKind::kRootCount, 0, std::to_string(roots) + " root tokens");

  if (indexed && heads_in_range) {
    // Following heads from any token must reach 0 within n steps.
    std::vector<char> reported(n + 1, 0);
    for (int start = 1; start <= n; ++start) {
      int cur = start;
      int steps = 0;
      while (cur != 0 && steps <= n) {
        cur = u.tokens[cur - 1].head;
        ++steps;
      }
      if (cur == 0) continue;
      // `cur` is now on the cycle; collect its members.
      std::vector<int> members;
      int node = cur;
      do {
        members.push_back(node);
        node = u.tokens[node - 1].head;
      } while (node != cur);
      int lowest = *std::min_element(members.begin(), members.end());
      if (reported[lowest]) continue;
      for (int m : members) reported[m] = 1;
      std::sort(members.begin(), members.end());
      std::string msg = "cycle through tokens";
      for (int m : members) msg += " " + std::to_string(m);
      add(ViolationKind::kCycle, lowest, msg);
    }
  }

  if (!allowed_tags.empty()) {
    for (const Token& t : u.tokens)
      if (!allowed_tags.count(t.pos))
        add(ViolationKind::kUnknownTag, t.index, "tag '" + t.pos + "' not in tagset");
  }
  return verdict;
}

std::string FilterLog::ToJsonLines() const {
  std::string out;
  for (const FilterLogEntry& e : discarded) {
    nlohmann::json violations = nlohmann::json::array();
    for (const Violation& v : e.violations)
      violations.push_back({{"kind", ViolationKindName(v.kind)},
                            {"token", v.token},
                            {"message", v.message}});
    nlohmann::json line = {{"id", e.id}, {"violations", violations}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

FilterResult FilterTreebank(const Treebank& treebank,
                            const std::set<std::string>& allowed_tags) {
  FilterResult result;
  for (const Utterance& u : treebank.utterances) {
    ValidationVerdict v = ValidateUtterance(u, allowed_tags);
    if (v.ok())
      result.kept.utterances.push_back(u);
    else
      result.log.discarded.push_back({u.id, std::move(v.violations)});
  }
  result.kept.RefreshTagset();
  return result;
}

std::set<std::string> ReadTagsetFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tagset: " + path);
  std::set<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    tags.insert(std::string(t));
  }
  return tags;
}

void SplitSpec::Validate() const {
  for (double f : {train_frac, dev_frac, test_frac})
    if (!(f > 0.0 && f < 1.0))
      throw std::invalid_argument("split fractions must lie in (0,1)");
  if (std::abs(train_frac + dev_frac + test_frac - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
}

TreebankSplits SplitDataset(const Treebank& treebank, const SplitSpec& spec) {
  spec.Validate();
  const std::size_t n = treebank.utterances.size();
  if (n == 0) throw DataError("cannot split an empty treebank");
  auto round_half_up = [](double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
  };
  const std::size_t n_train = round_half_up(spec.train_frac * static_cast<double>(n));
  const std::size_t n_dev = round_half_up(spec.dev_frac * static_cast<double>(n));
  if (n_train == 0 || n_dev == 0 || n_train + n_dev >= n)
    throw DataError("treebank of " + std::to_string(n) +
                    " utterances is too small for the requested split");

  std::mt19937_64 rng = MakeRng(spec.seed);
  std::vector<std::size_t> perm = SeededPermutation(n, rng);
  TreebankSplits out;
  for (std::size_t k = 0; k < n; ++k) {
    const Utterance& u = treebank.utterances[perm[k]];
    if (k < n_train)
      out.train.utterances.push_back(u);
    else if (k < n_train + n_dev)
      out.dev.utterances.push_back(u);
    else
      out.test.utterances.push_back(u);
  }
  out.train.RefreshTagset();
  out.dev.RefreshTagset();
  out.test.RefreshTagset();
  return out;
}

}  // namespace syntaxprobe
