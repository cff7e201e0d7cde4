// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <random>

#include "cfgu/error.hpp"
#include "cfgu/pii.hpp"
#include "fixtures.hpp"

using namespace cfgu;

namespace {

const PiiDetector& detector() {
  static const PiiDetector d(Gazetteers::load_dir(testing::data_dir() / "gazetteers"));
  return d;
}

std::vector<std::string> labels_of(std::string_view text, const LabelPolicy& policy = {}) {
  std::vector<std::string> out;
  for (const PiiSpan& s : detector().detect(text, policy)) out.push_back(s.label);
  return out;
}

using Labels = std::vector<std::string>;

}  // namespace

TEST_CASE("pattern labels") {
  const LabelPolicy none = LabelPolicy::from_list("");
  CHECK(labels_of("write to a.b-c@mail.example.co.uk today", none) == Labels{"EMAIL"});
  CHECK(labels_of("call (555) 123-4567 or +1 555.123.4567", none) == Labels{"PHONE", "PHONE"});
  CHECK(labels_of("see ftp://bob:pw@host.example/x", none) == Labels{"URL"});
  CHECK(labels_of("on July 4, 1999 and 2020-01-31 and 3rd of May", none) == Labels{"DATE", "DATE", "DATE"});
  CHECK(labels_of("at 10:45 am", none) == Labels{"TIME"});
  CHECK(labels_of("costs $1,200.50", none) == Labels{"MONEY"});
  CHECK(labels_of("grew 12.5% or 7 percent", none) == Labels{"PERCENT", "PERCENT"});
  CHECK(labels_of("the second and 21st", none) == Labels{"ORDINAL", "ORDINAL"});
  CHECK(labels_of("about 42 items", none) == Labels{"CARDINAL"});
}

TEST_CASE("default policy drops cardinal, date, product and ordinal") {
  const LabelPolicy policy;
  CHECK(policy.excluded == std::set<std::string>{"CARDINAL", "DATE", "PRODUCT", "ORDINAL"});
  CHECK(labels_of("On May 5 the 3rd team of 12 met John.") == Labels{"PERSON"});
}

TEST_CASE("gazetteer matches respect word boundaries and prefer the longest term") {
  const auto spans = detector().detect("Johnson met John in New York, not York.", {});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].surface == "John");
  CHECK(spans[0].start == 12);
  CHECK(spans[1].surface == "New York");
  CHECK(spans[1].label == "GPE");
  CHECK(labels_of("john lowercase") == Labels{});
}

TEST_CASE("first-name last-name bigram") {
  CHECK(labels_of("Sarah Miller called") == Labels{"PERSON"});
  const auto spans = detector().detect("Sarah Miller called", {});
  CHECK(spans[0].surface == "Sarah Miller");
  CHECK(labels_of("Sarah  Miller called") == Labels{});  // double space breaks the bigram
  CHECK(labels_of("Sarah alone") == Labels{});
}

TEST_CASE("overlaps resolve leftmost-longest before the policy filter") {
  // TIME starting at "3" beats the shorter CARDINAL at the same position.
  const auto spans = detector().detect("at 3:30 pm", LabelPolicy::from_list(""));
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].label == "TIME");
  CHECK(spans[0].surface == "3:30 pm");
  // Excluding TIME must not resurrect the hidden CARDINAL spans.
  CHECK(detector().detect("at 3:30 pm", LabelPolicy::from_list("TIME")).empty());
}

TEST_CASE("excluding more labels never increases the count") {
  const std::vector<std::string> fragments = {
      "John",        "said",        "Maria Lopez", "lives in",   "Berlin",        "on March 3, 2024",
      "with 12",     "people",      "at 3:30 pm",  "for $450",   "the first",     "time",
      "mail x@y.io", "555-123-4567", "Acme Corp",  "45%",        "Lake Tahoe",    "and"};
  const std::vector<std::string> all(recognized_labels().begin(), recognized_labels().end());
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int k = 0; k < 8; ++k) text += fragments[rng() % fragments.size()] + " ";
    LabelPolicy small = LabelPolicy::from_list("");
    for (const std::string& l : all) {
      if (rng() % 3 == 0) small.excluded.insert(l);
    }
    LabelPolicy large = small;
    for (const std::string& l : all) {
      if (rng() % 3 == 0) large.excluded.insert(l);
    }
    CHECK(detector().count(text, large) <= detector().count(text, small));
  }
}

TEST_CASE("label lists and gazetteer directories are validated") {
  CHECK(LabelPolicy::from_list(" DATE , GPE ").excluded == std::set<std::string>{"DATE", "GPE"});
  CHECK(LabelPolicy::from_list("").excluded.empty());
  CHECK_THROWS_AS(LabelPolicy::from_list("DATE,NAME"), ConfigError);
  CHECK_THROWS_AS(Gazetteers::load_dir(testing::data_dir() / "no_such_dir"), ConfigError);

  testing::TempDir dir("gaz");
  std::ofstream(dir / "NAMES.txt") << "x\n";
  CHECK_THROWS_AS(Gazetteers::load_dir(dir.path()), ConfigError);

  Gazetteers g;
  CHECK_THROWS_AS(g.add("PERSON", "-x"), ConfigError);
  g.add("ORG", "Initech");
  CHECK(PiiDetector(g).count("at Initech.", {}) == 1);
}

TEST_CASE("spans carry byte offsets and surfaces") {
  const std::string text = "Call Anna at 555-123-4567.";
  for (const PiiSpan& s : detector().detect(text, {})) {
    CHECK(text.substr(s.start, s.end - s.start) == s.surface);
  }
}
