// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfgu/guidance.hpp"

namespace cfgu {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr std::string_view kUnknownToken = "<unk>";

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws InvalidInput on duplicate tokens, empty tokens or eos out of range.
  Vocabulary(std::vector<std::string> tokens, TokenId eos_id);

  std::size_t size() const { return tokens_.size(); }
  TokenId eos_id() const { return eos_id_; }
  // Id of the "<unk>" token when the vocabulary has one.
  std::optional<TokenId> unk_id() const { return unk_id_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view word) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && eos_id_ == other.eos_id_;
  }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_id_ = 0;
  std::optional<TokenId> unk_id_;
  std::unordered_map<std::string, TokenId> index_;
};

// Whitespace word-level tokenization. Unknown words map to "<unk>"; a
// vocabulary without "<unk>" rejects them with InvalidInput.
TokenSeq tokenize(const Vocabulary& vocab, std::string_view text);
// Joins tokens with single spaces.
std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> ids);

// Anything that maps a batch of contexts to next-token logits. One call
// covers every context of a decoding step.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual std::vector<TokenScores> score_batch(std::span<const TokenSeq> contexts) const = 0;
};

// N-gram style lookup table: the longest tabulated suffix (up to `order`
// tokens) of the context selects the logit row, otherwise the fallback row.
class TabularLM final : public LanguageModel {
 public:
  using Table = std::map<TokenSeq, std::vector<double>>;

  TabularLM(Vocabulary vocab, int order, std::vector<double> fallback, Table table);

  static TabularLM from_json(std::string_view json);
  static TabularLM load(const std::filesystem::path& path);
  // Canonical serialization: load(p).to_json() reproduces a file written by
  // save() byte for byte.
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;

  const Vocabulary& vocab() const override { return vocab_; }
  std::vector<TokenScores> score_batch(std::span<const TokenSeq> contexts) const override;

  const std::vector<double>& lookup(std::span<const TokenId> context) const;
  int order() const { return order_; }
  const std::vector<double>& fallback() const { return fallback_; }
  const Table& table() const { return table_; }

  bool operator==(const TabularLM& other) const {
    return vocab_ == other.vocab_ && order_ == other.order_ && fallback_ == other.fallback_ && table_ == other.table_;
  }

 private:
  Vocabulary vocab_;
  int order_;
  std::vector<double> fallback_;
  Table table_;
};

}  // namespace cfgu
