// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgu/api_client.hpp"
#include "cfgu/decoder.hpp"
#include "cfgu/pii.hpp"

namespace cfgu {

// Prompt record shared by `generate` and `eval pii`: {"id": ..., "prompt": ...}
// where prompt is conversation-template text.
struct PromptRecord {
  std::string id;
  std::string prompt;
};

// Throws ParseError naming the offending line.
std::vector<PromptRecord> read_prompts(std::istream& in);

struct SampleResult {
  std::string id;
  std::string text;
  std::string stop_reason;
  std::vector<PiiSpan> pii_spans;
  std::optional<std::string> error;

  std::size_t pii_count() const { return pii_spans.size(); }
};

struct EvalTotals {
  std::size_t samples = 0;
  std::size_t total_pii = 0;
  std::size_t samples_with_pii = 0;
  std::size_t failed = 0;

  bool operator==(const EvalTotals&) const = default;
};

struct EvalReport {
  // Sorted by sample id.
  std::vector<SampleResult> per_sample;
  EvalTotals totals;
  nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
};

EvalTotals aggregate(const std::vector<SampleResult>& per_sample);

struct PiiEvalOptions {
  GuidanceSpec guidance;
  int max_new_tokens = 64;
  int workers = 1;
};

// Greedy guided decoding per prompt, then PII counting on each completion.
// Failed decodes are recorded and the run continues.
EvalReport run_pii_eval(const LanguageModel& model, const std::vector<PromptRecord>& samples,
                        const PiiEvalOptions& options, const PiiDetector& detector, const LabelPolicy& policy,
                        nlohmann::ordered_json config_echo = nlohmann::ordered_json::object());

// Stable key order, two-space indent, trailing newline.
std::string to_json_text(const EvalReport& report);

// Judge prompt for utility answers, with {question}, {correct_answer} and
// {answer} placeholders.
std::string_view judge_prompt_template();
std::string fill_judge_prompt(std::string_view question, std::string_view correct_answer, std::string_view answer);

enum class Verdict { kCorrect, kIncorrect, kCantTell };
std::string_view to_string(Verdict verdict);

// Earliest of "Correct" / "Incorrect" / "Can't tell" (case-insensitive,
// whole word). Anything else is CantTell.
Verdict parse_verdict(std::string_view raw);

struct QaItem {
  std::string id;
  std::string question;
  std::string correct_answer;
  std::string answer;
};
std::vector<QaItem> read_qa_items(std::istream& in);

struct JudgeVerdict {
  std::string id;
  Verdict verdict = Verdict::kCantTell;
  std::string raw_response;
  std::optional<std::string> error;
};

struct JudgeReport {
  std::vector<JudgeVerdict> verdicts;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t cant_tell = 0;
  double correctness_rate = 0.0;
};

struct JudgeOptions {
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
};

JudgeReport run_judge_eval(const std::vector<QaItem>& items, const CompletionBackend& judge,
                           const JudgeOptions& options = {});
nlohmann::ordered_json to_json(const JudgeReport& report);

}  // namespace cfgu
