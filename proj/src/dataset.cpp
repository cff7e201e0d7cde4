// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string ends_with_eos(std::string_view text, std::string_view eos) {
  std::string out(text);
  out += eos;
  return out;
}

// Conversation with the PII-avoidance system addition and, optionally, the
// nudge in front of the last user message.
std::vector<Turn> generation_turns(const ExpandedSample& sample, bool nudge) {
  std::vector<Turn> turns = parse_conversation(with_system_suffix(sample.prompt_context, kAvoidPiiSystem));
  if (nudge) {
    for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
      if (it->role == Role::kUser) {
        it->text = std::string(kAvoidPiiNudge) + " " + it->text;
        break;
      }
    }
  }
  return turns;
}

}  // namespace

ParsedDialogues parse_dialogues(std::istream& in) {
  ParsedDialogues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const nlohmann::json record = nlohmann::json::parse(line);
      Dialogue d;
      d.id = record.at("id").get<std::string>();
      for (const auto& m : record.at("messages")) {
        d.turns.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
      }
      validate_turns(d.turns);
      out.dialogues.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back({line_no, e.what()});
    } catch (const ParseError& e) {
      out.errors.push_back({line_no, e.what()});
    }
  }
  return out;
}

std::string ExpandedSample::answer_prefix() const { return parse_conversation(prompt_context).back().text; }

std::vector<ExpandedSample> expand(const Dialogue& dialogue, const PiiDetector& detector, const LabelPolicy& policy) {
  std::vector<ExpandedSample> samples;
  for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
    const Turn& turn = dialogue.turns[i];
    if (turn.role != Role::kAssistant) continue;
    const std::string history = render(std::span(dialogue.turns).first(i));
    for (const PiiSpan& span : detector.detect(turn.text, policy)) {
      std::size_t cut = span.start;
      while (cut > 0 && !is_ws(turn.text[cut - 1])) --cut;
      ExpandedSample s;
      s.dialogue_id = dialogue.id;
      s.ordinal = samples.size();
      s.turn_index = i;
      s.prompt_context = history + "\n" + role_header(Role::kAssistant) + turn.text.substr(0, cut);
      s.target_original = turn.text.substr(cut);
      s.pii_span = span;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::vector<std::string> train_dialogue_ids(std::vector<std::string> ids, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("split: ratio must be in (0, 1)");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng() % i]);
  ids.resize(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ids.size()))));
  return ids;
}

SplitResult split(const std::vector<ExpandedSample>& samples, double ratio, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const ExpandedSample& s : samples) ids.push_back(s.dialogue_id);
  const std::vector<std::string> train_ids = train_dialogue_ids(std::move(ids), ratio, seed);
  const std::set<std::string> train_set(train_ids.begin(), train_ids.end());
  SplitResult out;
  for (const ExpandedSample& s : samples) (train_set.contains(s.dialogue_id) ? out.train : out.test).push_back(s);
  return out;
}

bool is_chat_recipe(Recipe recipe) { return recipe == Recipe::kChatNudge || recipe == Recipe::kChatNudgeWithPrefix; }

std::string completion_prompt(const ExpandedSample& sample, bool nudge) {
  return render(generation_turns(sample, nudge));
}

std::vector<ChatMessage> chat_messages(const ExpandedSample& sample, bool with_prefix_instruction) {
  std::vector<Turn> turns = generation_turns(sample, true);
  // Chat mode cannot continue a partial answer; the open assistant turn goes.
  if (!turns.empty() && turns.back().role == Role::kAssistant) turns.pop_back();
  const std::string prefix = trim(sample.answer_prefix());
  if (with_prefix_instruction && !prefix.empty()) {
    for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
      if (it->role == Role::kUser) {
        it->text += "\n\n" + std::string(kStartWithInstruction) + " \"" + prefix + "\"";
        break;
      }
    }
  }
  std::vector<ChatMessage> messages;
  for (const Turn& t : turns) messages.push_back({std::string(to_string(t.role)), t.text});
  return messages;
}

GenerationOutcome generate_candidates(const ExpandedSample& sample, const GenerationConfig& config,
                                      const CompletionBackend& chat_backend,
                                      const CompletionBackend& completion_backend) {
  GenerationOutcome out;
  const std::string prefix = trim(sample.answer_prefix());
  for (Recipe recipe : config.recipes) {
    for (int k = 0; k < config.candidates_per_recipe; ++k) {
      try {
        std::string text;
        std::string model;
        switch (recipe) {
          case Recipe::kCompletion:
          case Recipe::kCompletionNudge:
            model = config.completion_model;
            text = completion_backend.complete(model, completion_prompt(sample, recipe == Recipe::kCompletionNudge),
                                               config.temperature);
            break;
          case Recipe::kChatNudge:
          case Recipe::kChatNudgeWithPrefix:
            model = config.chat_model;
            text = chat_backend.chat(model, chat_messages(sample, recipe == Recipe::kChatNudgeWithPrefix),
                                     config.temperature);
            break;
        }
        text = trim(text);
        if (recipe == Recipe::kChatNudgeWithPrefix && !prefix.empty() && text.starts_with(prefix)) {
          text = trim(std::string_view(text).substr(prefix.size()));
        }
        out.candidates.push_back({sample.key(), recipe, std::move(model), std::move(text)});
      } catch (const std::exception& e) {
        out.failures.push_back({sample.key(), recipe, e.what()});
      }
    }
  }
  return out;
}

GenerationOutcome generate_all(const std::vector<ExpandedSample>& samples, const GenerationConfig& config,
                               const CompletionBackend& chat_backend, const CompletionBackend& completion_backend) {
  std::vector<GenerationOutcome> per_sample(samples.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      per_sample[i] = generate_candidates(samples[i], config, chat_backend, completion_backend);
    }
  };
  {
    const std::size_t n_workers = std::min<std::size_t>(std::max(config.workers, 1), samples.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  GenerationOutcome out;
  for (GenerationOutcome& o : per_sample) {
    std::move(o.candidates.begin(), o.candidates.end(), std::back_inserter(out.candidates));
    std::move(o.failures.begin(), o.failures.end(), std::back_inserter(out.failures));
  }
  return out;
}

nlohmann::ordered_json to_json(const Candidate& candidate) {
  nlohmann::ordered_json j;
  j["sample"] = candidate.sample_key;
  j["recipe"] = static_cast<int>(candidate.recipe);
  j["model"] = candidate.model;
  j["text"] = candidate.text;
  return j;
}

Candidate candidate_from_json(const nlohmann::json& j) {
  const int recipe = j.at("recipe").get<int>();
  if (recipe < 1 || recipe > 4) throw ParseError("candidate: recipe must be 1..4");
  return {j.at("sample").get<std::string>(), static_cast<Recipe>(recipe), j.at("model").get<std::string>(),
          j.at("text").get<std::string>()};
}

TripleOutcome build_triples(const ExpandedSample& sample, const std::vector<Candidate>& candidates,
                            const PiiDetector& detector, const LabelPolicy& policy, bool cfg, std::string_view eos) {
  TripleOutcome out;
  const std::string rejected = ends_with_eos(sample.target_original, eos);
  if (detector.count(rejected, policy) == 0) {
    out.dropped = DropRecord{sample.key(), "original target has no detectable PII"};
    return out;
  }

  std::set<std::string> seen;
  for (const Candidate& c : candidates) {
    if (c.text.empty() || detector.count(c.text, policy) != 0 || !seen.insert(c.text).second) continue;
    const std::string chosen = ends_with_eos(c.text, eos);
    out.triples.push_back({sample.prompt_context, chosen, rejected, false, std::nullopt, sample.dialogue_id});
    if (cfg) {
      out.triples.push_back({with_system_suffix(sample.prompt_context, kDoNotShareCondition), chosen, rejected, true,
                             std::string(kDoNotShareCondition), sample.dialogue_id});
      out.triples.push_back({with_system_suffix(sample.prompt_context, kShareCondition), rejected, chosen, true,
                             std::string(kShareCondition), sample.dialogue_id});
    }
  }
  if (out.triples.empty()) out.dropped = DropRecord{sample.key(), "no PII-free candidate"};
  return out;
}

void check_triple(const PreferenceTriple& t, const PiiDetector& detector, const LabelPolicy& policy,
                  std::string_view eos) {
  if (!t.chosen.ends_with(eos) || !t.rejected.ends_with(eos)) {
    throw InvalidInput("triple for dialogue '" + t.dialogue_id + "' lacks the EOS marker");
  }
  const std::string& clean = t.swapped() ? t.rejected : t.chosen;
  const std::string& leaky = t.swapped() ? t.chosen : t.rejected;
  if (detector.count(clean, policy) != 0) {
    throw InvalidInput("triple for dialogue '" + t.dialogue_id + "': PII-free side contains PII");
  }
  if (detector.count(leaky, policy) == 0) {
    throw InvalidInput("triple for dialogue '" + t.dialogue_id + "': PII side has no PII");
  }
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_ws(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

LengthOutcome enforce_lengths(const PreferenceTriple& triple, const LengthFn& length, const LengthLimits& limits) {
  const std::size_t longest_completion = std::max(length(triple.chosen), length(triple.rejected));
  if (longest_completion > limits.max_total) {
    return {std::nullopt, "completion of " + std::to_string(longest_completion) + " units exceeds " +
                              std::to_string(limits.max_total)};
  }
  const auto fits = [&](std::size_t prompt_len) {
    return prompt_len <= limits.max_prompt && prompt_len + longest_completion <= limits.max_total;
  };
  if (fits(length(triple.prompt))) return {triple, {}};

  std::vector<Turn> turns = parse_conversation(triple.prompt);
  const std::size_t keep_front = turns.front().role == Role::kSystem ? 1 : 0;
  while (turns.size() > keep_front + 2) {
    // Whole user/assistant exchanges go together so roles keep alternating.
    const std::size_t n = std::min<std::size_t>(2, turns.size() - keep_front - 2);
    const auto first = turns.begin() + static_cast<std::ptrdiff_t>(keep_front);
    turns.erase(first, first + static_cast<std::ptrdiff_t>(n));
    PreferenceTriple trimmed = triple;
    trimmed.prompt = render(turns);
    if (fits(length(trimmed.prompt))) return {std::move(trimmed), {}};
  }
  return {std::nullopt, "prompt cannot be shortened to fit the length limits"};
}

nlohmann::ordered_json to_json(const PreferenceTriple& t) {
  nlohmann::ordered_json j;
  j["prompt"] = t.prompt;
  j["chosen"] = t.chosen;
  j["rejected"] = t.rejected;
  j["cfg_augmented"] = t.cfg_augmented;
  j["system_suffix"] = t.system_suffix ? nlohmann::ordered_json(*t.system_suffix) : nlohmann::ordered_json(nullptr);
  j["dialogue_id"] = t.dialogue_id;
  return j;
}

void write_jsonl(std::ostream& out, const std::vector<PreferenceTriple>& triples) {
  for (const PreferenceTriple& t : triples) out << to_json(t).dump() << '\n';
}

}  // namespace cfgu
