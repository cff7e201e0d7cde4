// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "cfgu/guidance.hpp"
#include "cfgu/lm.hpp"

namespace cfgu {

using SelectMode = std::variant<Greedy, Sample>;

struct DecodeRequest {
  // Conversation-template text, optionally ending in a partial assistant turn.
  std::string dialogue_prefix;
  GuidanceSpec guidance;
  int max_new_tokens = 64;
  SelectMode mode = Greedy{};
  bool trace = false;
};

enum class StopReason { kEos, kLength };
std::string_view to_string(StopReason reason);

struct StepTrace {
  TokenScores positive;
  TokenScores negative;
  std::vector<double> combined;
  TokenId chosen = 0;
};

struct DecodeResult {
  // Detokenized completion without the trailing EOS token.
  std::string text;
  TokenSeq token_ids;
  StopReason stop_reason = StopReason::kLength;
  std::vector<StepTrace> trace;
};

struct ContextTexts {
  std::string positive;
  // The negative-conditioned prompt, or the unmodified prompt for uncond-log.
  std::string negative;
};

// Appends the guidance conditions to the system turn of the prefix.
// Throws ParseError on a malformed conversation.
ContextTexts build_context_texts(const DecodeRequest& request);

struct ContextIds {
  TokenSeq positive;
  TokenSeq negative;
};
ContextIds build_contexts(const Vocabulary& vocab, const DecodeRequest& request);

// Autoregressive guided decoding. Each step issues exactly one score_batch
// call holding the positive and negative contexts; the chosen token is
// appended to both.
DecodeResult decode(const LanguageModel& model, const DecodeRequest& request);

}  // namespace cfgu
