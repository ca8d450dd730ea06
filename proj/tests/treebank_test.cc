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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "support/synthetic.h"
#include "syntaxprobe/treebank.h"

using namespace syntaxprobe;

namespace {

Treebank Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseTreebank(in);
}

std::string Line(int id, const std::string& form, const std::string& pos, int head,
                 const std::string& misc) {
  return std::to_string(id) + "\t" + form + "\t_\t" + pos + "\t_\t_\t" + std::to_string(head) +
         "\t_\t_\t" + misc + "\n";
}

Utterance MakeUtterance(const std::vector<int>& heads) {
  Utterance u;
  u.id = "u";
  u.audio_ref = "u";
  for (std::size_t i = 0; i < heads.size(); ++i)
    u.tokens.push_back({static_cast<int>(i) + 1, "w", "NOM", heads[i], 0.1 * i, 0.1 * i + 0.1});
  return u;
}

bool HasKind(const ValidationVerdict& v, ViolationKind kind) {
  for (const Violation& x : v.violations)
    if (x.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("single token utterance maps fields directly") {
  Treebank tb = Parse("# sent_id = a\n" + Line(1, "oui", "INTJ", 0, "start=0.10|end=0.35"));
  REQUIRE(tb.utterances.size() == 1);
  const Token& t = tb.utterances[0].tokens[0];
  CHECK(t.index == 1);
  CHECK(t.form == "oui");
  CHECK(t.pos == "INTJ");
  CHECK(t.head == 0);
  CHECK(t.start_time == 0.10);
  CHECK(t.end_time == 0.35);
  CHECK(tb.utterances[0].audio_ref == "a");
  CHECK(tb.tagset == std::set<std::string>{"INTJ"});
}

TEST_CASE("utterances keep input order and audio comment") {
  Treebank tb = Parse("# sent_id = b\n# audio = rec7\n" +
                      Line(1, "x", "NOM", 0, "start=0|end=1") + "\n# sent_id = a\n" +
                      Line(1, "y", "VRB", 0, "Foo=bar|start=1|end=2") + "\n");
  REQUIRE(tb.utterances.size() == 2);
  CHECK(tb.utterances[0].id == "b");
  CHECK(tb.utterances[0].audio_ref == "rec7");
  CHECK(tb.utterances[1].id == "a");
}

TEST_CASE("multiword ranges and empty nodes are skipped") {
  Treebank tb = Parse("# sent_id = a\n1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                      Line(1, "de", "PRP", 0, "start=0|end=1") +
                      Line(2, "le", "DET", 1, "start=1|end=2") +
                      "2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n");
  CHECK(tb.utterances[0].tokens.size() == 2);
}

TEST_CASE("parse errors carry the line number") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      Parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("# sent_id = a\n" + Line(1, "x", "NOM", 0, "start=0.5")) == 2);
  CHECK(line_of("# sent_id = a\n" + Line(1, "x", "NOM", 0, "start=0.5|end=abc")) == 2);
  CHECK(line_of("# sent_id = a\n" + Line(1, "x", "NOM", 0, "start=5e-1|end=1")) == 2);
  CHECK(line_of("# sent_id = a\n1\tx\tNOM\n") == 2);
  CHECK(line_of("# sent_id = a\n1\tx\t_\tNOM\t_\t_\tzero\t_\t_\tstart=0|end=1\n") == 2);
  CHECK(line_of("# sent_id = a\n" + Line(1, "x", "NOM", 0, "start=0|end=1") +
                "\n# sent_id = a\n" + Line(1, "x", "NOM", 0, "start=0|end=1")) == 4);
  CHECK(line_of(Line(1, "x", "NOM", 0, "start=0|end=1")) == 1);
}

TEST_CASE("validation flags each violation class") {
  SUBCASE("valid chain passes") { CHECK(ValidateUtterance(MakeUtterance({2, 3, 0})).ok()); }
  SUBCASE("start after end") {
    Utterance u = MakeUtterance({0});
    u.tokens[0].start_time = 1.2;
    u.tokens[0].end_time = 1.0;
    CHECK(HasKind(ValidateUtterance(u), ViolationKind::kTimecodeOrder));
  }
  SUBCASE("equal start and end") {
    Utterance u = MakeUtterance({0});
    u.tokens[0].end_time = u.tokens[0].start_time;
    CHECK(HasKind(ValidateUtterance(u), ViolationKind::kTimecodeOrder));
  }
  SUBCASE("reversed token order") {
    Utterance u = MakeUtterance({0, 1});
    u.tokens[1].start_time = 0.0;
    u.tokens[0].start_time = 0.05;
    CHECK(HasKind(ValidateUtterance(u), ViolationKind::kTimecodeReversed));
  }
  SUBCASE("head out of range or self") {
    CHECK(HasKind(ValidateUtterance(MakeUtterance({0, 5})), ViolationKind::kHeadOutOfRange));
    CHECK(HasKind(ValidateUtterance(MakeUtterance({0, 2})), ViolationKind::kHeadOutOfRange));
    CHECK(HasKind(ValidateUtterance(MakeUtterance({0, -1})), ViolationKind::kHeadOutOfRange));
  }
  SUBCASE("root count") {
    CHECK(HasKind(ValidateUtterance(MakeUtterance({0, 0})), ViolationKind::kRootCount));
    CHECK(HasKind(ValidateUtterance(MakeUtterance({2, 1})), ViolationKind::kRootCount));
  }
  SUBCASE("cycle between tokens 1 and 2") {
    ValidationVerdict v = ValidateUtterance(MakeUtterance({2, 1, 0}));
    REQUIRE(HasKind(v, ViolationKind::kCycle));
    int cycles = 0;
    for (const Violation& x : v.violations)
      if (x.kind == ViolationKind::kCycle) {
        ++cycles;
        CHECK(x.message == "cycle through tokens 1 2");
      }
    CHECK(cycles == 1);
  }
  SUBCASE("tagset") {
    CHECK(HasKind(ValidateUtterance(MakeUtterance({0}), {"VRB"}), ViolationKind::kUnknownTag));
    CHECK(ValidateUtterance(MakeUtterance({0}), {"NOM"}).ok());
    CHECK(ValidateUtterance(MakeUtterance({0}), {}).ok());
  }
  SUBCASE("non-contiguous indices") {
    Utterance u = MakeUtterance({0, 1});
    u.tokens[1].index = 3;
    CHECK(HasKind(ValidateUtterance(u), ViolationKind::kIndexing));
  }
}

TEST_CASE("filter keeps valid utterances and logs the rest") {
  Treebank tb;
  for (int i = 0; i < 3; ++i) {
    Utterance u = MakeUtterance({2, 0});
    u.id = "u" + std::to_string(i);
    tb.utterances.push_back(u);
  }
  SUBCASE("identity on a valid treebank") {
    FilterResult r = FilterTreebank(tb);
    CHECK(r.kept.utterances == tb.utterances);
    CHECK(r.log.discarded.empty());
    CHECK(r.log.ToJsonLines().empty());
  }
  SUBCASE("one invalid") {
    tb.utterances[1].tokens[0].head = 0;
    FilterResult r = FilterTreebank(tb);
    CHECK(r.kept.utterances.size() == 2);
    REQUIRE(r.log.discarded.size() == 1);
    CHECK(r.log.discarded[0].id == "u1");
    const std::string json = r.log.ToJsonLines();
    CHECK(json.find("\"id\":\"u1\"") != std::string::npos);
    CHECK(json.find("root_count") != std::string::npos);
  }
  SUBCASE("empty") {
    FilterResult r = FilterTreebank(Treebank{});
    CHECK(r.kept.utterances.empty());
    CHECK(r.log.discarded.empty());
  }
}

TEST_CASE("split sizes, determinism and errors") {
  Treebank tb;
  for (int i = 0; i < 10; ++i) {
    Utterance u = MakeUtterance({0});
    u.id = "u" + std::to_string(i);
    tb.utterances.push_back(u);
  }
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    TreebankSplits s = SplitDataset(tb, {0.8, 0.1, 0.1, seed});
    CHECK(s.train.utterances.size() == 8);
    CHECK(s.dev.utterances.size() == 1);
    CHECK(s.test.utterances.size() == 1);
    std::set<std::string> ids;
    for (const Treebank* p : {&s.train, &s.dev, &s.test})
      for (const Utterance& u : p->utterances) ids.insert(u.id);
    CHECK(ids.size() == 10);
  }
  TreebankSplits a = SplitDataset(tb, {0.8, 0.1, 0.1, 5});
  TreebankSplits b = SplitDataset(tb, {0.8, 0.1, 0.1, 5});
  CHECK(a.train.Hash() == b.train.Hash());
  CHECK(a.dev.Hash() == b.dev.Hash());
  CHECK(a.test.Hash() == b.test.Hash());

  Treebank small;
  small.utterances.assign(tb.utterances.begin(), tb.utterances.begin() + 2);
  CHECK_THROWS_AS(SplitDataset(small, {0.8, 0.1, 0.1, 0}), DataError);
  CHECK_THROWS_AS(SplitDataset(Treebank{}, {0.8, 0.1, 0.1, 0}), DataError);
  CHECK_THROWS_AS(SplitDataset(tb, {0.8, 0.3, 0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(SplitDataset(tb, {1.0, 0.0, 0.0, 0}), std::invalid_argument);
}

TEST_CASE("split partitions cover the input for many sizes") {
  for (int n = 3; n < 60; ++n) {
    Treebank tb;
    for (int i = 0; i < n; ++i) {
      Utterance u = MakeUtterance({0});
      u.id = "u" + std::to_string(i);
      tb.utterances.push_back(u);
    }
    TreebankSplits s;
    try {
      s = SplitDataset(tb, {0.8, 0.1, 0.1, static_cast<std::uint64_t>(n)});
    } catch (const DataError&) {
      continue;  // too small for a non-empty dev/test split
    }
    std::multiset<std::string> ids;
    for (const Treebank* p : {&s.train, &s.dev, &s.test})
      for (const Utterance& u : p->utterances) ids.insert(u.id);
    CHECK(ids.size() == static_cast<std::size_t>(n));
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == static_cast<std::size_t>(n));
    CHECK(s.train.utterances.size() == static_cast<std::size_t>(std::floor(0.8 * n + 0.5)));
  }
}

TEST_CASE("parse of serialized random treebanks is the identity") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dur(0.001, 0.9);
  const std::vector<std::string> tags = {"NOM", "VRB", "ADJ", "PRO:per", "DET:def"};
  for (int trial = 0; trial < 50; ++trial) {
    Treebank tb;
    const int utts = 1 + static_cast<int>(rng() % 6);
    for (int u = 0; u < utts; ++u) {
      Utterance utt;
      utt.id = "t" + std::to_string(trial) + "-" + std::to_string(u);
      utt.audio_ref = (u % 2) ? utt.id : "audio/" + utt.id;
      const std::size_t n = 1 + rng() % 12;
      std::vector<int> heads = testing::RandomTree(n, rng);
      double t = dur(rng);
      for (std::size_t i = 0; i < n; ++i) {
        Token tok{static_cast<int>(i) + 1, "f" + std::to_string(rng() % 100), tags[rng() % tags.size()],
                  heads[i], t, 0.0};
        t += dur(rng);
        tok.end_time = t;
        utt.tokens.push_back(tok);
      }
      tb.utterances.push_back(utt);
    }
    tb.RefreshTagset();
    std::ostringstream out;
    WriteTreebank(out, tb);
    Treebank back = Parse(out.str());
    CHECK(back.utterances == tb.utterances);
    CHECK(back.tagset == tb.tagset);
    for (const Utterance& u : back.utterances) CHECK(ValidateUtterance(u).ok());
  }
}
