// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Toy models and data shared by the unit tests and the acceptance binary.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cfgu/guidance.hpp"
#include "cfgu/lm.hpp"

#ifndef CFGU_TEST_DATA_DIR
#error "CFGU_TEST_DATA_DIR must be defined"
#endif

namespace cfgu::testing {

inline std::filesystem::path data_dir() { return CFGU_TEST_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("cfgu_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Three-token distributions where log-space guidance at gamma = 3 promotes
// the 0.02 token and probability-space guidance keeps the 0.9 token.
inline const std::vector<double> kPathologyPositive = {0.9, 0.08, 0.02};
inline const std::vector<double> kPathologyNegative = {0.5, 0.4999, 0.0001};

// Logit row for a vocabulary of `size` where only `probs` carry mass.
// exp(-1000) underflows to zero, so softmax reproduces `probs` up to rounding.
inline std::vector<double> logit_row(std::size_t size, const std::map<TokenId, double>& probs) {
  std::vector<double> row(size, -1000.0);
  for (const auto& [id, p] : probs) row[id] = std::log(p);
  return row;
}

inline TokenId id_of(const Vocabulary& vocab, const std::string& word) { return *vocab.find(word); }

inline const std::vector<std::string>& condition_words() {
  static const std::vector<std::string> words = {"Do",   "not", "provide", "any", "personal", "data.", "data",
                                                 "You",  "should", "share", "in",  "the",     "answers."};
  return words;
}

// Prompt "System: s\nUser: q\nAssistant:" continued by one of a/b/c then EOS.
// Positive context (suffix "... data.") sees the pathology positive row and
// the negative context (suffix "... answers.") the pathology negative row.
inline TabularLM pathology_model() {
  std::vector<std::string> tokens = {"<eos>", "a", "b", "c", "System:", "User:", "Assistant:", "s", "q"};
  tokens.insert(tokens.end(), condition_words().begin(), condition_words().end());
  const Vocabulary vocab(tokens, 0);
  const std::size_t v = vocab.size();
  const TokenId a = id_of(vocab, "a"), b = id_of(vocab, "b"), c = id_of(vocab, "c");
  const TokenId user = id_of(vocab, "User:"), q = id_of(vocab, "q"), asst = id_of(vocab, "Assistant:");

  TabularLM::Table table;
  table[{id_of(vocab, "data."), user, q, asst}] =
      logit_row(v, {{a, kPathologyPositive[0]}, {b, kPathologyPositive[1]}, {c, kPathologyPositive[2]}});
  table[{id_of(vocab, "answers."), user, q, asst}] =
      logit_row(v, {{a, kPathologyNegative[0]}, {b, kPathologyNegative[1]}, {c, kPathologyNegative[2]}});
  for (TokenId t : {a, b, c}) table[{t}] = logit_row(v, {{0, 1.0}});
  return TabularLM(vocab, 4, logit_row(v, {{0, 1.0}}), std::move(table));
}

inline const char* kPathologyPrompt = "System: s\nUser: q\nAssistant:";

inline constexpr int kUnlearningPrompts = 50;

inline std::string unlearning_prompt(int i) {
  return "System: default\nUser: w" + std::to_string(i) + "\nAssistant:";
}

// After each unlearning prompt the negative-conditioned context puts 0.7 on
// "John" (a PERSON gazetteer entry); the positive one puts 0.7 on "friend"
// and 0.05 on "John". Both words are followed by EOS.
inline TabularLM unlearning_model() {
  std::vector<std::string> tokens = {"<eos>", "System:", "User:", "Assistant:", "default", "John", "friend"};
  tokens.insert(tokens.end(), condition_words().begin(), condition_words().end());
  for (int i = 0; i < kUnlearningPrompts; ++i) tokens.push_back("w" + std::to_string(i));
  const Vocabulary vocab(tokens, 0);
  const std::size_t v = vocab.size();
  const TokenId eos = 0, john = id_of(vocab, "John"), friend_ = id_of(vocab, "friend");
  const TokenId user = id_of(vocab, "User:"), asst = id_of(vocab, "Assistant:");

  TabularLM::Table table;
  for (int i = 0; i < kUnlearningPrompts; ++i) {
    const TokenId w = id_of(vocab, "w" + std::to_string(i));
    table[{id_of(vocab, "data."), user, w, asst}] = logit_row(v, {{friend_, 0.7}, {john, 0.05}, {eos, 0.25}});
    table[{id_of(vocab, "answers."), user, w, asst}] = logit_row(v, {{john, 0.7}, {friend_, 0.1}, {eos, 0.2}});
  }
  table[{john}] = logit_row(v, {{eos, 1.0}});
  table[{friend_}] = logit_row(v, {{eos, 1.0}});
  return TabularLM(vocab, 4, logit_row(v, {{eos, 1.0}}), std::move(table));
}

// Hand count of non-excluded PII spans in assistant turns of dialogues.jsonl
// under the default policy and the gazetteers/ directory:
//   d01 John, Acme Corp                         2
//   d02 (date and cardinal only)                0
//   d03 e-mail, phone                           2
//   d04 Maria Lopez, Berlin | (2019 cardinal)   2
//   d05                                         0
//   d06 Sarah Miller, David Kim, Paris, 3:30 pm 4
//   d07 Lake Tahoe, $450 (first is ordinal)     2
//   d08 URL with credentials                    1
//   d09 Anna, 45%, Canada                       3
//   d10 Globex, New York | Peter                3
inline constexpr std::size_t kFixturePiiSpans = 19;
inline constexpr std::size_t kFixtureDialogues = 10;

}  // namespace cfgu::testing
