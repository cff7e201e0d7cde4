// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::string key_of(const TokenSeq& ids) {
  std::string key;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(ids[i]);
  }
  return key;
}

TokenSeq parse_key(const std::string& key) {
  TokenSeq ids;
  if (key.empty()) return ids;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = key.find(',', pos);
    const std::size_t end = comma == std::string::npos ? key.size() : comma;
    TokenId id = 0;
    const auto [ptr, ec] = std::from_chars(key.data() + pos, key.data() + end, id);
    if (ec != std::errc() || ptr != key.data() + end || end == pos) {
      throw ParseError("tabular model: bad table key '" + key + "'");
    }
    ids.push_back(id);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return ids;
}

void check_row(const std::vector<double>& row, std::size_t vocab_size, const std::string& what) {
  if (row.size() != vocab_size) {
    throw InvalidInput("tabular model: " + what + " has " + std::to_string(row.size()) +
                       " entries, vocabulary has " + std::to_string(vocab_size));
  }
  for (double v : row) {
    if (!std::isfinite(v)) throw InvalidInput("tabular model: non-finite logit in " + what);
  }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
  if (eos_id_ >= tokens_.size()) throw InvalidInput("vocabulary: eos id out of range");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty()) throw InvalidInput("vocabulary: empty token at id " + std::to_string(i));
    for (char c : t) {
      if (is_space(c)) throw InvalidInput("vocabulary: token '" + t + "' contains whitespace");
    }
    if (!index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw InvalidInput("vocabulary: duplicate token '" + t + "'");
    }
  }
  if (auto it = index_.find(std::string(kUnknownToken)); it != index_.end()) unk_id_ = it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw InvalidInput("vocabulary: token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return std::nullopt;
}

TokenSeq tokenize(const Vocabulary& vocab, std::string_view text) {
  TokenSeq ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      const std::string_view word = text.substr(i, j - i);
      if (auto id = vocab.find(word)) {
        ids.push_back(*id);
      } else if (vocab.unk_id()) {
        ids.push_back(*vocab.unk_id());
      } else {
        throw InvalidInput("tokenize: word '" + std::string(word) + "' not in vocabulary and no <unk> token");
      }
    }
    i = j;
  }
  return ids;
}

std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string text;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) text += ' ';
    text += vocab.token(ids[i]);
  }
  return text;
}

TabularLM::TabularLM(Vocabulary vocab, int order, std::vector<double> fallback, Table table)
    : vocab_(std::move(vocab)), order_(order), fallback_(std::move(fallback)), table_(std::move(table)) {
  if (vocab_.size() == 0) throw InvalidInput("tabular model: empty vocabulary");
  if (order_ < 1) throw InvalidInput("tabular model: order must be >= 1");
  check_row(fallback_, vocab_.size(), "fallback");
  for (const auto& [suffix, row] : table_) {
    if (suffix.size() > static_cast<std::size_t>(order_)) {
      throw InvalidInput("tabular model: suffix '" + key_of(suffix) + "' longer than order");
    }
    for (TokenId id : suffix) {
      if (id >= vocab_.size()) throw InvalidInput("tabular model: suffix '" + key_of(suffix) + "' has bad token id");
    }
    check_row(row, vocab_.size(), "row '" + key_of(suffix) + "'");
  }
}

TabularLM TabularLM::from_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tabular model: ") + e.what());
  }
  try {
    static const std::vector<std::string> kKeys = {"vocab", "eos", "order", "fallback", "table"};
    for (const auto& [key, value] : doc.items()) {
      if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
        throw ParseError("tabular model: unknown key '" + key + "'");
      }
    }
    Vocabulary vocab(doc.at("vocab").get<std::vector<std::string>>(), doc.at("eos").get<TokenId>());
    Table table;
    for (const auto& [key, row] : doc.at("table").items()) {
      table.emplace(parse_key(key), row.get<std::vector<double>>());
    }
    return TabularLM(std::move(vocab), doc.at("order").get<int>(), doc.at("fallback").get<std::vector<double>>(),
                     std::move(table));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tabular model: ") + e.what());
  }
}

TabularLM TabularLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("tabular model: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string TabularLM::to_json() const {
  nlohmann::ordered_json doc;
  doc["vocab"] = vocab_.tokens();
  doc["eos"] = vocab_.eos_id();
  doc["order"] = order_;
  doc["fallback"] = fallback_;
  nlohmann::ordered_json table = nlohmann::ordered_json::object();
  for (const auto& [suffix, row] : table_) table[key_of(suffix)] = row;
  doc["table"] = std::move(table);
  return doc.dump() + "\n";
}

void TabularLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("tabular model: cannot write " + path.string());
  out << to_json();
}

const std::vector<double>& TabularLM::lookup(std::span<const TokenId> context) const {
  const std::size_t longest = std::min(context.size(), static_cast<std::size_t>(order_));
  for (std::size_t len = longest + 1; len-- > 0;) {
    TokenSeq suffix(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
    if (auto it = table_.find(suffix); it != table_.end()) return it->second;
  }
  return fallback_;
}

std::vector<TokenScores> TabularLM::score_batch(std::span<const TokenSeq> contexts) const {
  std::vector<TokenScores> out;
  out.reserve(contexts.size());
  for (const TokenSeq& ctx : contexts) {
    for (TokenId id : ctx) {
      if (id >= vocab_.size()) throw InvalidInput("score_batch: token id " + std::to_string(id) + " out of range");
    }
    out.push_back({lookup(ctx), Scale::kLogits});
  }
  return out;
}

}  // namespace cfgu
