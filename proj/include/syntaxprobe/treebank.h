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

#ifndef SYNTAXPROBE_TREEBANK_H_
#define SYNTAXPROBE_TREEBANK_H_

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "syntaxprobe/util.h"

namespace syntaxprobe {

// One transcript token. `head` is 0 for the root, otherwise the 1-based
// index of the governing token. Times are in seconds.
struct Token {
  int index = 0;
  std::string form;
  std::string pos;
  int head = 0;
  double start_time = 0.0;
  double end_time = 0.0;

  bool operator==(const Token&) const = default;
};

struct Utterance {
  std::string id;
  std::vector<Token> tokens;
  // Key into the feature manifest. Taken from a `# audio = ...` comment and
  // defaulting to the utterance id.
  std::string audio_ref;

  std::size_t size() const { return tokens.size(); }
  std::vector<int> heads() const;
  bool operator==(const Utterance&) const = default;
};

struct Treebank {
  std::vector<Utterance> utterances;
  std::set<std::string> tagset;

  std::size_t token_count() const;
  // Recomputes `tagset` from the tokens.
  void RefreshTagset();
  // Content hash over every retained field, used for cache keys.
  std::string Hash() const;
};

// Column positions (0-based) of a CoNLL-style layout. The default is CoNLL-U.
struct ColumnLayout {
  int column_count = 10;
  int id = 0;
  int form = 1;
  int pos = 3;
  int head = 6;
  int misc = 9;
  std::string start_key = "start";
  std::string end_key = "end";
};

// Structural parse failure. `line()` is 1-based.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Reads a CoNLL-U-shaped stream. Utterances are separated by blank lines and
// named by `# sent_id = <id>`; timecodes live in MISC as `start=..|end=..`.
// Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped.
Treebank ParseTreebank(std::istream& in, const ColumnLayout& layout = {});
Treebank ReadTreebankFile(const std::string& path,
                          const ColumnLayout& layout = {});

// Inverse of ParseTreebank on the fields it retains. Unused columns are `_`.
void WriteTreebank(std::ostream& out, const Treebank& treebank);
void WriteTreebankFile(const std::string& path, const Treebank& treebank);

enum class ViolationKind {
  kTimecodeOrder,     // start >= end within a token
  kTimecodeReversed,  // token i+1 starts before token i
  kHeadOutOfRange,    // head < 0, head > n or head == index
  kRootCount,         // zero or several roots
  kCycle,             // head chain does not reach the root
  kUnknownTag,        // POS outside the allowed tagset
  kIndexing,          // token indices not 1..n
};

const char* ViolationKindName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int token = 0;  // 1-based token index, 0 when utterance-level
  std::string message;
};

struct ValidationVerdict {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// An empty `allowed_tags` accepts any tag.
ValidationVerdict ValidateUtterance(const Utterance& utterance,
                                    const std::set<std::string>& allowed_tags = {});

struct FilterLogEntry {
  std::string id;
  std::vector<Violation> violations;
};

struct FilterLog {
  std::vector<FilterLogEntry> discarded;
  // One JSON object per line: {"id": ..., "violations": [...]}.
  std::string ToJsonLines() const;
};

struct FilterResult {
  Treebank kept;
  FilterLog log;
};

FilterResult FilterTreebank(const Treebank& treebank,
                            const std::set<std::string>& allowed_tags = {});

// Reads a tagset file: one tag per line, `#` comments and blank lines ignored.
std::set<std::string> ReadTagsetFile(const std::string& path);

struct SplitSpec {
  double train_frac = 0.8;
  double dev_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct TreebankSplits {
  Treebank train;
  Treebank dev;
  Treebank test;
};

// Utterance-level shuffle-and-cut. Train takes round(train_frac * n)
// utterances of the seeded permutation, dev the next round(dev_frac * n),
// test the rest (round-half-up). Throws DataError if a partition is empty.
TreebankSplits SplitDataset(const Treebank& treebank, const SplitSpec& spec);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_TREEBANK_H_
