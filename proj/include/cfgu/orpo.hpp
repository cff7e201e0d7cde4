// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Odds-ratio preference loss:
//
//   p        = exp(mean token log-prob), clamped to [eps, 1 - eps]
//   odds     = p / (1 - p)
//   or_term  = -log sigmoid(log odds(chosen) - log odds(rejected))
//   nll      = -mean token log-prob of chosen
//   total    = nll + beta * or_term

#pragma once

#include <span>
#include <vector>

namespace cfgu {

struct OrpoConfig {
  double beta = 0.1;
  // Average token log-probs before the odds transform; when false the
  // summed sequence log-prob is used instead.
  bool length_normalize = true;
  double eps = 1e-8;
};

struct OrpoLoss {
  double total = 0.0;
  double nll = 0.0;
  double or_term = 0.0;
};

// Throws InvalidInput on empty input or entries that are non-finite or > 0.
double avg_logprob(std::span<const double> token_logprobs);

// log(p / (1 - p)) with p = exp(logp) clamped to [eps, 1 - eps].
double log_odds(double logp, double eps = 1e-8);

// -log sigmoid(x), computed without overflow.
double neg_log_sigmoid(double x);

// Throws NumericError naming the stage that produced a non-finite value.
OrpoLoss odds_ratio_loss(std::span<const double> chosen, std::span<const double> rejected,
                         const OrpoConfig& config = {});

}  // namespace cfgu
