// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

constexpr double kSumTolerance = 1e-6;

void check_same_length(const TokenScores& a, const TokenScores& b) {
  if (a.size() == 0 || a.size() != b.size()) {
    throw InvalidInput("guidance: score vectors must be non-empty and of equal length (got " +
                       std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  }
}

void validate_scores(const TokenScores& scores) {
  if (scores.values.empty()) throw InvalidInput("normalize: empty score vector");
  for (double v : scores.values) {
    const bool zero_prob_log = scores.scale == Scale::kLogProbs && v == -std::numeric_limits<double>::infinity();
    if (!std::isfinite(v) && !zero_prob_log) {
      throw InvalidInput("normalize: non-finite score in " + std::string(to_string(scores.scale)) + " input");
    }
  }
  if (scores.scale == Scale::kProbs) {
    double sum = 0.0;
    for (double p : scores.values) {
      if (p < 0.0 || p > 1.0) throw InvalidInput("normalize: probability outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw InvalidInput("normalize: probabilities do not sum to 1");
  } else if (scores.scale == Scale::kLogProbs) {
    double sum = 0.0;
    for (double lp : scores.values) {
      if (lp > 0.0) throw InvalidInput("normalize: positive log-probability");
      sum += std::exp(lp);
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw InvalidInput("normalize: log-probabilities do not exp-sum to 1");
  }
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - max);
  const double lse = max + std::log(sum);
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [lse](double x) { return x - lse; });
  return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

// Linear guidance step. Written as g*pos + (1-g)*neg so g=1 and g=0 reproduce
// the inputs exactly; equal inputs (including two -inf) pass through.
double guide(double neg, double pos, double gamma) {
  if (pos == neg || gamma == 1.0) return pos;
  if (gamma == 0.0) return neg;
  return gamma * pos + (1.0 - gamma) * neg;
}

std::vector<double> guide_all(const std::vector<double>& neg, const std::vector<double>& pos, double gamma) {
  std::vector<double> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = guide(neg[i], pos[i], gamma);
  return out;
}

void check_gamma(double gamma) {
  if (!std::isfinite(gamma)) throw InvalidInput("guidance: gamma must be finite");
}

std::vector<double> log_space(const TokenScores& scores, bool raw_logits) {
  if (raw_logits && scores.scale == Scale::kLogits) {
    validate_scores(scores);
    return scores.values;
  }
  return normalize(scores, Scale::kLogProbs).values;
}

}  // namespace

std::string_view to_string(Scale scale) {
  switch (scale) {
    case Scale::kLogits: return "logits";
    case Scale::kLogProbs: return "log-probs";
    case Scale::kProbs: return "probs";
  }
  return "?";
}

std::string_view to_string(GuidanceVariant variant) {
  switch (variant) {
    case GuidanceVariant::kUncondLog: return "uncond-log";
    case GuidanceVariant::kDualLog: return "dual-log";
    case GuidanceVariant::kDualProb: return "dual-prob";
  }
  return "?";
}

GuidanceVariant parse_variant(std::string_view name) {
  if (name == "uncond-log") return GuidanceVariant::kUncondLog;
  if (name == "dual-log") return GuidanceVariant::kDualLog;
  if (name == "dual-prob") return GuidanceVariant::kDualProb;
  throw InvalidInput("unknown guidance variant '" + std::string(name) + "'");
}

void GuidanceSpec::validate() const {
  if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidInput("guidance: gamma must be finite and >= 0");
  if (variant == GuidanceVariant::kUncondLog && !negative_condition.empty()) {
    throw InvalidInput("guidance: uncond-log takes no negative condition");
  }
}

TokenScores normalize(const TokenScores& scores, Scale target) {
  validate_scores(scores);
  if (scores.scale == target) return scores;

  switch (target) {
    case Scale::kProbs:
      if (scores.scale == Scale::kLogits) return {softmax(scores.values), Scale::kProbs};
      {
        std::vector<double> out(scores.size());
        std::transform(scores.values.begin(), scores.values.end(), out.begin(), [](double lp) { return std::exp(lp); });
        return {std::move(out), Scale::kProbs};
      }
    case Scale::kLogProbs:
    case Scale::kLogits:
      if (scores.scale == Scale::kProbs) {
        std::vector<double> out(scores.size());
        std::transform(scores.values.begin(), scores.values.end(), out.begin(), [](double p) { return std::log(p); });
        return {std::move(out), target};
      }
      if (scores.scale == Scale::kLogProbs) return {scores.values, target};
      return {log_softmax(scores.values), target};
  }
  return scores;
}

std::vector<double> cfg_log_uncond(const TokenScores& uncond, const TokenScores& cond, double gamma) {
  check_same_length(uncond, cond);
  check_gamma(gamma);
  return guide_all(normalize(uncond, Scale::kLogProbs).values, normalize(cond, Scale::kLogProbs).values, gamma);
}

std::vector<double> cfg_log_dual(const TokenScores& neg, const TokenScores& pos, double gamma) {
  check_same_length(neg, pos);
  check_gamma(gamma);
  return guide_all(normalize(neg, Scale::kLogProbs).values, normalize(pos, Scale::kLogProbs).values, gamma);
}

std::vector<double> cfg_prob_dual(const TokenScores& neg, const TokenScores& pos, double gamma) {
  check_same_length(neg, pos);
  check_gamma(gamma);
  return guide_all(normalize(neg, Scale::kProbs).values, normalize(pos, Scale::kProbs).values, gamma);
}

std::vector<double> apply_guidance(const GuidanceSpec& spec, const TokenScores& negative,
                                   const TokenScores& positive) {
  check_same_length(negative, positive);
  check_gamma(spec.gamma);
  switch (spec.variant) {
    case GuidanceVariant::kUncondLog:
    case GuidanceVariant::kDualLog:
      return guide_all(log_space(negative, spec.raw_logits), log_space(positive, spec.raw_logits), spec.gamma);
    case GuidanceVariant::kDualProb:
      return cfg_prob_dual(negative, positive, spec.gamma);
  }
  throw InvalidInput("guidance: unknown variant");
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("select_token: empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw InvalidInput("select_token: NaN score at token " + std::to_string(i));
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::optional<std::size_t> sample_clamped(std::span<const double> weights, std::mt19937_64& rng) {
  if (weights.empty()) throw InvalidInput("select_token: empty score vector");
  double total = 0.0;
  for (double w : weights) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      throw InvalidInput("select_token: cannot sample from NaN or infinite weights");
    }
    if (w > 0.0) total += w;
  }
  if (!(total > 0.0)) return std::nullopt;

  // 53 random mantissa bits, reproducible across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

std::size_t select_token(std::span<const double> scores, Greedy, std::span<const double>) {
  return argmax(scores);
}

std::size_t select_token(std::span<const double> scores, std::mt19937_64& rng, std::span<const double> fallback) {
  if (auto drawn = sample_clamped(scores, rng)) return *drawn;
  return argmax(fallback.empty() ? scores : fallback);
}

std::size_t select_token(std::span<const double> scores, Sample mode, std::span<const double> fallback) {
  std::mt19937_64 rng(mode.seed);
  return select_token(scores, rng, fallback);
}

}  // namespace cfgu
