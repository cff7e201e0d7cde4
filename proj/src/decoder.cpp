// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/decoder.hpp"

#include <array>
#include <random>

#include "cfgu/conversation.hpp"
#include "cfgu/error.hpp"

namespace cfgu {

std::string_view to_string(StopReason reason) { return reason == StopReason::kEos ? "eos" : "length"; }

ContextTexts build_context_texts(const DecodeRequest& request) {
  const GuidanceSpec& spec = request.guidance;
  // Validates the template even when no condition is attached.
  parse_conversation(request.dialogue_prefix);
  ContextTexts out;
  out.positive = with_system_suffix(request.dialogue_prefix, spec.positive_condition);
  out.negative = spec.variant == GuidanceVariant::kUncondLog
                     ? request.dialogue_prefix
                     : with_system_suffix(request.dialogue_prefix, spec.negative_condition);
  return out;
}

ContextIds build_contexts(const Vocabulary& vocab, const DecodeRequest& request) {
  const ContextTexts texts = build_context_texts(request);
  return {tokenize(vocab, texts.positive), tokenize(vocab, texts.negative)};
}

DecodeResult decode(const LanguageModel& model, const DecodeRequest& request) {
  if (request.max_new_tokens < 1) throw InvalidInput("decode: max_new_tokens must be >= 1");
  request.guidance.validate();

  const Vocabulary& vocab = model.vocab();
  const ContextIds start = build_contexts(vocab, request);
  std::array<TokenSeq, 2> contexts = {start.positive, start.negative};

  const bool sampling = std::holds_alternative<Sample>(request.mode);
  std::mt19937_64 rng(sampling ? std::get<Sample>(request.mode).seed : 0);

  DecodeResult result;
  for (int step = 0; step < request.max_new_tokens; ++step) {
    std::vector<TokenScores> scores = model.score_batch(contexts);
    if (scores.size() != 2) throw InvalidInput("decode: model returned " + std::to_string(scores.size()) + " rows for 2 contexts");

    std::vector<double> combined = apply_guidance(request.guidance, scores[1], scores[0]);

    TokenId chosen;
    if (!sampling) {
      chosen = static_cast<TokenId>(argmax(combined));
    } else {
      const std::vector<double> positive_probs = normalize(scores[0], Scale::kProbs).values;
      if (request.guidance.variant == GuidanceVariant::kDualProb) {
        chosen = static_cast<TokenId>(select_token(combined, rng, positive_probs));
      } else {
        const std::vector<double> weights = normalize({combined, Scale::kLogits}, Scale::kProbs).values;
        chosen = static_cast<TokenId>(select_token(weights, rng, positive_probs));
      }
    }

    if (request.trace) result.trace.push_back({scores[0], scores[1], std::move(combined), chosen});
    result.token_ids.push_back(chosen);
    if (chosen == vocab.eos_id()) {
      result.stop_reason = StopReason::kEos;
      break;
    }
    for (TokenSeq& ctx : contexts) ctx.push_back(chosen);
  }

  std::span<const TokenId> visible = result.token_ids;
  if (result.stop_reason == StopReason::kEos) visible = visible.first(visible.size() - 1);
  result.text = detokenize(vocab, visible);
  return result;
}

}  // namespace cfgu
