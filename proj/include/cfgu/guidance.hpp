// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classifier-free guidance over next-token score vectors.
//
// Three combination rules are provided:
//   uncond-log: log P(w|ctx) + g * (log P(w|ctx, c) - log P(w|ctx))
//   dual-log:   log P(w|c_neg) + g * (log P(w|c_pos) - log P(w|c_neg))
//   dual-prob:  P(w|c_neg) + g * (P(w|c_pos) - P(w|c_neg))
//
// The log-space rules can push a token that is unlikely under both
// conditions to the top whenever it is much less likely under the negative
// condition. The probability-space rule bounds every score to [1-g, g] for
// g >= 1, so such tokens cannot overtake the positive-conditioned favourite.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgu {

enum class Scale { kLogits, kLogProbs, kProbs };

std::string_view to_string(Scale scale);

// A vocabulary-length score vector tagged with the scale it is expressed in.
struct TokenScores {
  std::vector<double> values;
  Scale scale = Scale::kLogits;

  std::size_t size() const { return values.size(); }
};

enum class GuidanceVariant { kUncondLog, kDualLog, kDualProb };

std::string_view to_string(GuidanceVariant variant);
GuidanceVariant parse_variant(std::string_view name);

// Sentences appended to the system prompt to build the two conditioned
// contexts.
inline constexpr std::string_view kDoNotShareCondition = "Do not provide any personal data.";
inline constexpr std::string_view kShareCondition = "You should share personal data in the answers.";

struct GuidanceSpec {
  double gamma = 1.0;
  GuidanceVariant variant = GuidanceVariant::kDualProb;
  std::string positive_condition{kDoNotShareCondition};
  // Empty means the unmodified prompt acts as the baseline.
  std::string negative_condition{kShareCondition};
  // Apply the log-space rules to raw logits instead of log-softmaxed scores.
  bool raw_logits = false;

  // Throws InvalidInput when gamma is not finite or negative, or when
  // uncond-log is paired with a negative condition.
  void validate() const;
};

// Converts between scales via softmax / log-softmax / exp / log.
// Converting to kLogits yields log-probabilities (the canonical logits).
// Throws InvalidInput on empty or non-finite input.
TokenScores normalize(const TokenScores& scores, Scale target);

// uncond + gamma * (cond - uncond) over log-probabilities.
std::vector<double> cfg_log_uncond(const TokenScores& uncond, const TokenScores& cond, double gamma);

// neg + gamma * (pos - neg) over log-probabilities.
std::vector<double> cfg_log_dual(const TokenScores& neg, const TokenScores& pos, double gamma);

// neg + gamma * (pos - neg) over probabilities. The result is an unnormalized
// score vector and may leave [0, 1].
std::vector<double> cfg_prob_dual(const TokenScores& neg, const TokenScores& pos, double gamma);

// Dispatches on spec.variant. For uncond-log, `negative` is the unconditional
// scores. Log-space variants honour spec.raw_logits.
std::vector<double> apply_guidance(const GuidanceSpec& spec, const TokenScores& negative,
                                   const TokenScores& positive);

// Token selection.
struct Greedy {};
struct Sample {
  std::uint64_t seed = 0;
};

// Index of the maximum score; ties go to the lowest id. Throws InvalidInput on
// empty input or any NaN.
std::size_t argmax(std::span<const double> scores);

// Clamps negative weights to zero, renormalizes and draws one index using
// `rng`. Returns nullopt when no positive mass remains.
std::optional<std::size_t> sample_clamped(std::span<const double> weights, std::mt19937_64& rng);

// Greedy or clamp-and-renormalize sampling over `scores`. When sampling finds
// no positive mass, falls back to greedy over `fallback` (or over `scores`
// when `fallback` is empty).
std::size_t select_token(std::span<const double> scores, Greedy mode,
                         std::span<const double> fallback = {});
std::size_t select_token(std::span<const double> scores, Sample mode,
                         std::span<const double> fallback = {});
std::size_t select_token(std::span<const double> scores, std::mt19937_64& rng,
                         std::span<const double> fallback = {});

}  // namespace cfgu
