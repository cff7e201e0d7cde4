// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Preference-pair dataset construction for PII unlearning:
//
//   dialogues --expand--> one sample per PII span in assistant turns
//             --split---> train/test grouped by dialogue
//             --generate> PII-free candidate answers from an LLM endpoint
//             --triples-> (prompt, chosen, rejected), optionally with the
//                         two system-prompt conditions (swapped roles for
//                         the "share" condition)

#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgu/api_client.hpp"
#include "cfgu/conversation.hpp"
#include "cfgu/guidance.hpp"
#include "cfgu/pii.hpp"

namespace cfgu {

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct ParsedDialogues {
  std::vector<Dialogue> dialogues;
  std::vector<RecordError> errors;
};

// JSONL, one {"id": ..., "messages": [{"role": ..., "content": ...}]} per
// line. Invalid records are skipped and reported with their line number.
ParsedDialogues parse_dialogues(std::istream& in);

struct ExpandedSample {
  std::string dialogue_id;
  // Position of this sample among the dialogue's samples.
  std::size_t ordinal = 0;
  std::size_t turn_index = 0;
  // Conversation through the assistant header plus the answer prefix.
  std::string prompt_context;
  // Remainder of the assistant answer, starting at or before pii_span.
  std::string target_original;
  // Offsets relative to the assistant answer text.
  PiiSpan pii_span;

  std::string key() const { return dialogue_id + "#" + std::to_string(ordinal); }
  // The answer prefix that ends prompt_context (empty when the PII opens the answer).
  std::string answer_prefix() const;
};

// One sample per PII span in assistant turns. The prompt/target cut snaps
// back to the nearest whitespace boundary at or before the span.
std::vector<ExpandedSample> expand(const Dialogue& dialogue, const PiiDetector& detector, const LabelPolicy& policy);

struct SplitResult {
  std::vector<ExpandedSample> train;
  std::vector<ExpandedSample> test;
};

// Dialogue ids sorted, shuffled with a seeded Fisher-Yates pass, and the
// first round(ratio * n) go to train. Throws InvalidInput unless 0 < ratio < 1.
std::vector<std::string> train_dialogue_ids(std::vector<std::string> ids, double ratio, std::uint64_t seed);
SplitResult split(const std::vector<ExpandedSample>& samples, double ratio, std::uint64_t seed);

inline constexpr std::string_view kAvoidPiiSystem = "Avoid using any personal data in the answers!";
inline constexpr std::string_view kAvoidPiiNudge =
    "(Do not use any personal data, e.g. names, locations or any other personal data in your answer even if it "
    "was used in the dialog)";
inline constexpr std::string_view kStartWithInstruction = "Start your answer with the following words:";

enum class Recipe : int {
  kCompletion = 1,           // completion mode, system addition
  kCompletionNudge = 2,      // completion mode, system addition + user nudge
  kChatNudge = 3,            // chat mode, system addition + user nudge
  kChatNudgeWithPrefix = 4,  // chat mode, as 3 plus an instructed answer prefix
};

bool is_chat_recipe(Recipe recipe);

struct GenerationConfig {
  std::string completion_model = "meta-llama/Llama-3-8b-chat-hf";
  std::string chat_model = "gpt-4o-mini";
  double temperature = 0.7;
  int candidates_per_recipe = 1;
  std::vector<Recipe> recipes = {Recipe::kCompletion, Recipe::kCompletionNudge, Recipe::kChatNudge,
                                 Recipe::kChatNudgeWithPrefix};
  // Maximum in-flight samples.
  int workers = 4;
};

// Request payloads, exposed so they can be inspected without a server.
std::string completion_prompt(const ExpandedSample& sample, bool nudge);
std::vector<ChatMessage> chat_messages(const ExpandedSample& sample, bool with_prefix_instruction);

struct Candidate {
  std::string sample_key;
  Recipe recipe = Recipe::kCompletion;
  std::string model;
  std::string text;
};

struct GenerationFailure {
  std::string sample_key;
  Recipe recipe = Recipe::kCompletion;
  std::string message;
};

struct GenerationOutcome {
  std::vector<Candidate> candidates;
  std::vector<GenerationFailure> failures;
};

// Runs every configured recipe for one sample. Backend failures become
// failure records.
GenerationOutcome generate_candidates(const ExpandedSample& sample, const GenerationConfig& config,
                                      const CompletionBackend& chat_backend,
                                      const CompletionBackend& completion_backend);

// Same for many samples with up to config.workers samples in flight. Output
// order follows the input order.
GenerationOutcome generate_all(const std::vector<ExpandedSample>& samples, const GenerationConfig& config,
                               const CompletionBackend& chat_backend, const CompletionBackend& completion_backend);

nlohmann::ordered_json to_json(const Candidate& candidate);
Candidate candidate_from_json(const nlohmann::json& j);

struct PreferenceTriple {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  bool cfg_augmented = false;
  std::optional<std::string> system_suffix;
  std::string dialogue_id;

  // True for the "share" condition, where chosen holds the PII answer.
  bool swapped() const { return system_suffix && *system_suffix == kShareCondition; }
};

struct DropRecord {
  std::string sample_key;
  std::string reason;
};

struct TripleOutcome {
  std::vector<PreferenceTriple> triples;
  std::optional<DropRecord> dropped;
};

inline constexpr std::string_view kDefaultEos = "<|eot_id|>";

// Candidates without PII become chosen answers against the original target.
// With cfg set, each base triple also yields a "do not provide" copy and a
// "share" copy whose chosen/rejected are swapped.
TripleOutcome build_triples(const ExpandedSample& sample, const std::vector<Candidate>& candidates,
                            const PiiDetector& detector, const LabelPolicy& policy, bool cfg,
                            std::string_view eos = kDefaultEos);

// Throws InvalidInput when the triple breaks the chosen/rejected PII
// invariants (inverted for swapped triples) or lacks the EOS marker.
void check_triple(const PreferenceTriple& triple, const PiiDetector& detector, const LabelPolicy& policy,
                  std::string_view eos = kDefaultEos);

using LengthFn = std::function<std::size_t(std::string_view)>;
// Counts whitespace-separated words.
std::size_t word_count(std::string_view text);

struct LengthLimits {
  std::size_t max_prompt = 1900;
  std::size_t max_total = 2048;
};

struct LengthOutcome {
  std::optional<PreferenceTriple> triple;
  std::string reason;
};

// Drops the oldest user/assistant exchanges until the prompt fits max_prompt and
// prompt + each completion fits max_total. The system turn and the final
// two turns are never dropped.
LengthOutcome enforce_lengths(const PreferenceTriple& triple, const LengthFn& length, const LengthLimits& limits = {});

nlohmann::ordered_json to_json(const PreferenceTriple& triple);
void write_jsonl(std::ostream& out, const std::vector<PreferenceTriple>& triples);

}  // namespace cfgu
