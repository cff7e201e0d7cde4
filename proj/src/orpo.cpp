// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/orpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

void check_logprobs(std::span<const double> lp) {
  if (lp.empty()) throw InvalidInput("orpo: empty completion");
  for (double v : lp) {
    if (!std::isfinite(v) || v > 0.0) throw InvalidInput("orpo: token log-probs must be finite and <= 0");
  }
}

double finite_or_throw(double v, const char* stage) {
  if (!std::isfinite(v)) throw NumericError(std::string("orpo: non-finite value at stage '") + stage + "'");
  return v;
}

double sequence_logprob(std::span<const double> lp, bool normalize) {
  check_logprobs(lp);
  const double sum = std::accumulate(lp.begin(), lp.end(), 0.0);
  return normalize ? sum / static_cast<double>(lp.size()) : sum;
}

}  // namespace

double avg_logprob(std::span<const double> token_logprobs) { return sequence_logprob(token_logprobs, true); }

double log_odds(double logp, double eps) {
  const double p = std::clamp(std::exp(logp), eps, 1.0 - eps);
  return std::log(p) - std::log1p(-p);
}

double neg_log_sigmoid(double x) {
  // softplus(-x)
  return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

OrpoLoss odds_ratio_loss(std::span<const double> chosen, std::span<const double> rejected, const OrpoConfig& config) {
  if (!std::isfinite(config.beta) || config.beta <= 0.0) throw InvalidInput("orpo: beta must be finite and > 0");
  const double chosen_lp = finite_or_throw(sequence_logprob(chosen, config.length_normalize), "chosen log-prob");
  const double rejected_lp = finite_or_throw(sequence_logprob(rejected, config.length_normalize), "rejected log-prob");
  const double ratio = finite_or_throw(log_odds(chosen_lp, config.eps) - log_odds(rejected_lp, config.eps), "log odds ratio");

  OrpoLoss loss;
  loss.nll = finite_or_throw(-avg_logprob(chosen), "nll");
  loss.or_term = finite_or_throw(neg_log_sigmoid(ratio), "odds ratio term");
  loss.total = finite_or_throw(loss.nll + config.beta * loss.or_term, "total");
  return loss;
}

}  // namespace cfgu
