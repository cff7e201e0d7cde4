// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <random>

#include "cfgu/conversation.hpp"
#include "cfgu/decoder.hpp"
#include "cfgu/error.hpp"
#include "cfgu/lm.hpp"
#include "fixtures.hpp"

using namespace cfgu;

namespace {

class CountingModel final : public LanguageModel {
 public:
  explicit CountingModel(const LanguageModel& inner) : inner_(inner) {}
  const Vocabulary& vocab() const override { return inner_.vocab(); }
  std::vector<TokenScores> score_batch(std::span<const TokenSeq> contexts) const override {
    ++calls;
    batch_sizes.push_back(contexts.size());
    return inner_.score_batch(contexts);
  }
  mutable std::atomic<int> calls{0};
  mutable std::vector<std::size_t> batch_sizes;

 private:
  const LanguageModel& inner_;
};

DecodeRequest request_for(const std::string& prompt, GuidanceVariant variant, double gamma) {
  DecodeRequest r;
  r.dialogue_prefix = prompt;
  r.guidance.variant = variant;
  r.guidance.gamma = gamma;
  if (variant == GuidanceVariant::kUncondLog) r.guidance.negative_condition.clear();
  return r;
}

}  // namespace

TEST_CASE("conversation template renders and parses") {
  const std::vector<Turn> turns = {{Role::kSystem, "Be brief."}, {Role::kUser, "Hi\nthere"}, {Role::kAssistant, ""}};
  const std::string text = render(turns);
  CHECK(text == "System: Be brief.\nUser: Hi\nthere\nAssistant: ");
  CHECK(parse_conversation(text) == turns);
  CHECK_THROWS_AS(parse_conversation("hello\nUser: x"), ParseError);
  CHECK(with_system_suffix("System: a\nUser: b", "X.") == "System: a X.\nUser: b");
  CHECK(with_system_suffix("System:\nUser: b", "X.") == "System: X.\nUser: b");
  CHECK(with_system_suffix("System: a", "") == "System: a");
  CHECK_THROWS_AS(validate_turns(std::vector<Turn>{{Role::kUser, "x"}}), ParseError);
}

TEST_CASE("tokenizer maps unknown words to <unk> or rejects them") {
  const Vocabulary with_unk({"<eos>", "<unk>", "hi"}, 0);
  CHECK(tokenize(with_unk, "  hi there\nhi ") == TokenSeq{2, 1, 2});
  CHECK(detokenize(with_unk, TokenSeq{2, 2}) == "hi hi");
  const Vocabulary strict({"<eos>", "hi"}, 0);
  CHECK_THROWS_AS(tokenize(strict, "hi there"), InvalidInput);
  CHECK_THROWS_AS(Vocabulary({"a", "a"}, 0), InvalidInput);
  CHECK_THROWS_AS(Vocabulary({"a b"}, 0), InvalidInput);
  CHECK_THROWS_AS(Vocabulary({"a"}, 3), InvalidInput);
}

TEST_CASE("tabular model picks the longest tabulated suffix") {
  const Vocabulary vocab({"<eos>", "x", "y", "z"}, 0);
  TabularLM::Table table;
  table[{1}] = {0, 1, 0, 0};
  table[{2, 1}] = {0, 0, 1, 0};
  table[{}] = {0, 0, 0, 1};
  const TabularLM lm(vocab, 2, {1, 0, 0, 0}, table);
  CHECK(lm.lookup(TokenSeq{3, 1}) == std::vector<double>{0, 1, 0, 0});
  CHECK(lm.lookup(TokenSeq{3, 2, 1}) == std::vector<double>{0, 0, 1, 0});
  CHECK(lm.lookup(TokenSeq{3}) == std::vector<double>{0, 0, 0, 1});

  const TabularLM no_empty(vocab, 2, {1, 0, 0, 0}, {{{1}, {0, 1, 0, 0}}});
  CHECK(no_empty.lookup(TokenSeq{3}) == std::vector<double>{1, 0, 0, 0});

  CHECK_THROWS_AS(TabularLM(vocab, 1, {1, 0, 0, 0}, {{{1, 2}, {0, 0, 0, 0}}}), InvalidInput);
  CHECK_THROWS_AS(TabularLM(vocab, 2, {1, 0, 0}, {}), InvalidInput);
}

TEST_CASE("tabular model JSON round-trips byte for byte") {
  const TabularLM lm = testing::pathology_model();
  const std::string text = lm.to_json();
  const TabularLM back = TabularLM::from_json(text);
  CHECK(back == lm);
  CHECK(back.to_json() == text);

  testing::TempDir dir("lm");
  lm.save(dir / "m.json");
  CHECK(testing::read_file(dir / "m.json") == text);
  CHECK_THROWS_AS(TabularLM::from_json("{\"vocab\": [\"a\"]"), ParseError);
  CHECK_THROWS_AS(TabularLM::from_json(R"({"vocab":["a"],"eos":0,"order":1,"fallback":[0],"table":{},"x":1})"),
                  ParseError);
  CHECK_THROWS_AS(TabularLM::from_json(R"({"vocab":["a"],"eos":0,"order":1,"fallback":[0],"table":{"q":[0]}})"),
                  ParseError);
}

TEST_CASE("context building appends the conditions to the system turn") {
  DecodeRequest r = request_for("System: s\nUser: q\nAssistant:", GuidanceVariant::kDualProb, 2.0);
  ContextTexts texts = build_context_texts(r);
  CHECK(texts.positive == "System: s Do not provide any personal data.\nUser: q\nAssistant: ");
  CHECK(texts.negative == "System: s You should share personal data in the answers.\nUser: q\nAssistant: ");

  r = request_for("System: s\nUser: q\nAssistant:", GuidanceVariant::kUncondLog, 2.0);
  texts = build_context_texts(r);
  CHECK(texts.negative == "System: s\nUser: q\nAssistant:");

  r.dialogue_prefix = "no header";
  CHECK_THROWS_AS(build_context_texts(r), ParseError);
}

TEST_CASE("pathology model: log-space and probability-space decodes diverge") {
  const TabularLM lm = testing::pathology_model();
  DecodeRequest r = request_for(testing::kPathologyPrompt, GuidanceVariant::kDualLog, 3.0);
  r.trace = true;
  const DecodeResult log_run = decode(lm, r);
  CHECK(log_run.text == "c");
  CHECK(log_run.stop_reason == StopReason::kEos);
  REQUIRE(log_run.trace.size() == 2);
  CHECK(log_run.trace[0].chosen == testing::id_of(lm.vocab(), "c"));

  r.guidance.variant = GuidanceVariant::kDualProb;
  const DecodeResult prob_run = decode(lm, r);
  CHECK(prob_run.text == "a");
  CHECK(prob_run.trace[0].combined[testing::id_of(lm.vocab(), "a")] == doctest::Approx(1.7).epsilon(1e-9));
}

TEST_CASE("gamma 1 reproduces positive-only decoding and gamma 0 negative-only") {
  const TabularLM lm = testing::unlearning_model();
  for (auto variant : {GuidanceVariant::kDualLog, GuidanceVariant::kDualProb}) {
    DecodeRequest r = request_for(testing::unlearning_prompt(3), variant, 1.0);
    CHECK(decode(lm, r).text == "friend");
    r.guidance.gamma = 0.0;
    CHECK(decode(lm, r).text == "John");
  }
  DecodeRequest plain = request_for(testing::unlearning_prompt(3), GuidanceVariant::kDualProb, 1.0);
  plain.guidance.positive_condition = "";
  plain.guidance.negative_condition = "";
  // No condition at all: context ends in "default", which is untabulated.
  CHECK(decode(lm, plain).text.empty());
}

TEST_CASE("one batched score call per generated token") {
  const TabularLM base = testing::unlearning_model();
  CountingModel counting(base);
  DecodeRequest r = request_for(testing::unlearning_prompt(0), GuidanceVariant::kDualProb, 2.0);
  const DecodeResult out = decode(counting, r);
  CHECK(out.token_ids.size() == 2);
  CHECK(counting.calls == 2);
  for (std::size_t n : counting.batch_sizes) CHECK(n == 2);
}

TEST_CASE("length stop and max_new_tokens") {
  const Vocabulary vocab({"<eos>", "System:", "x"}, 0);
  const TabularLM loop(vocab, 1, {0.0, 0.0, 5.0}, {});
  DecodeRequest r;
  r.dialogue_prefix = "System: x";
  r.guidance.gamma = 1.0;
  r.guidance.positive_condition = "";
  r.guidance.negative_condition = "";
  r.max_new_tokens = 4;
  const DecodeResult out = decode(loop, r);
  CHECK(out.stop_reason == StopReason::kLength);
  CHECK(out.token_ids.size() == 4);
  CHECK(out.text == "x x x x");
  r.max_new_tokens = 0;
  CHECK_THROWS_AS(decode(loop, r), InvalidInput);
}

TEST_CASE("sampled decoding is reproducible for a fixed seed") {
  const Vocabulary vocab({"<eos>", "System:", "x", "y", "z"}, 0);
  const TabularLM lm(vocab, 1, {0.5, 0.0, 1.0, 1.0, 1.0}, {});
  for (auto variant : {GuidanceVariant::kDualLog, GuidanceVariant::kDualProb}) {
    DecodeRequest r;
    r.dialogue_prefix = "System: x";
    r.guidance.variant = variant;
    r.guidance.gamma = 2.0;
    r.guidance.positive_condition = "";
    r.guidance.negative_condition = "";
    r.max_new_tokens = 30;
    r.mode = Sample{42};
    const DecodeResult a = decode(lm, r);
    const DecodeResult b = decode(lm, r);
    CHECK(a.token_ids == b.token_ids);
    std::vector<TokenSeq> runs;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      r.mode = Sample{seed};
      runs.push_back(decode(lm, r).token_ids);
    }
    bool differs = false;
    for (const auto& run : runs) differs |= run != runs.front();
    CHECK(differs);
  }
}
