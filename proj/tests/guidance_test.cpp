// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cfgu/error.hpp"
#include "cfgu/guidance.hpp"
#include "fixtures.hpp"

using namespace cfgu;

namespace {

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  std::vector<double> p(n);
  double sum = 0;
  for (double& x : p) sum += (x = u(rng));
  for (double& x : p) x /= sum;
  return p;
}

std::vector<double> logs(const std::vector<double>& p) {
  std::vector<double> out;
  for (double x : p) out.push_back(std::log(x));
  return out;
}

}  // namespace

TEST_CASE("normalize converts between scales and is idempotent") {
  const TokenScores logits{{1.0, 2.0, 3.0}, Scale::kLogits};
  const TokenScores probs = normalize(logits, Scale::kProbs);
  double sum = 0;
  for (double p : probs.values) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(probs.values[2] == doctest::Approx(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));

  const TokenScores lp = normalize(logits, Scale::kLogProbs);
  CHECK(normalize(lp, Scale::kLogProbs).values == lp.values);
  CHECK(normalize(probs, Scale::kProbs).values == probs.values);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::exp(lp.values[i]) == doctest::Approx(probs.values[i]));

  // Shift invariance of softmax.
  const TokenScores shifted = normalize({{101.0, 102.0, 103.0}, Scale::kLogits}, Scale::kProbs);
  for (std::size_t i = 0; i < 3; ++i) CHECK(shifted.values[i] == doctest::Approx(probs.values[i]).epsilon(1e-12));
}

TEST_CASE("normalize rejects malformed input") {
  CHECK_THROWS_AS(normalize({{}, Scale::kLogits}, Scale::kProbs), InvalidInput);
  CHECK_THROWS_AS(normalize({{0.5, 0.6}, Scale::kProbs}, Scale::kProbs), InvalidInput);
  CHECK_THROWS_AS(normalize({{-0.1, 1.1}, Scale::kProbs}, Scale::kLogProbs), InvalidInput);
  CHECK_THROWS_AS(normalize({{1.0, std::nan("")}, Scale::kLogits}, Scale::kProbs), InvalidInput);
  CHECK_THROWS_AS(normalize({{1.0, std::numeric_limits<double>::infinity()}, Scale::kLogits}, Scale::kProbs),
                  InvalidInput);
  // -inf is a legal log-probability.
  const TokenScores lp{{0.0, -std::numeric_limits<double>::infinity()}, Scale::kLogProbs};
  CHECK(normalize(lp, Scale::kProbs).values == std::vector<double>{1.0, 0.0});
}

TEST_CASE("log-space and probability-space guidance on the pathology instance") {
  const TokenScores pos{testing::kPathologyPositive, Scale::kProbs};
  const TokenScores neg{testing::kPathologyNegative, Scale::kProbs};

  // Independent formula oracle.
  std::vector<double> log_oracle, prob_oracle;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lp = std::log(testing::kPathologyPositive[i]);
    const double ln = std::log(testing::kPathologyNegative[i]);
    log_oracle.push_back(ln + 3.0 * (lp - ln));
    prob_oracle.push_back(testing::kPathologyNegative[i] +
                          3.0 * (testing::kPathologyPositive[i] - testing::kPathologyNegative[i]));
  }

  const auto log_scores = cfg_log_dual(neg, pos, 3.0);
  const auto prob_scores = cfg_prob_dual(neg, pos, 3.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(log_scores[i] == doctest::Approx(log_oracle[i]).epsilon(1e-12));
    CHECK(prob_scores[i] == doctest::Approx(prob_oracle[i]).epsilon(1e-12));
  }
  CHECK(argmax(log_scores) == 2);
  CHECK(argmax(prob_scores) == 0);
  CHECK(prob_scores[0] == doctest::Approx(1.7));
}

TEST_CASE("gamma 1 and gamma 0 collapse exactly") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = 2 + rng() % 63;
    const auto p = random_probs(rng, v), n = random_probs(rng, v);
    const TokenScores pos{p, Scale::kProbs}, neg{n, Scale::kProbs};
    CHECK(cfg_prob_dual(neg, pos, 1.0) == p);
    CHECK(cfg_prob_dual(neg, pos, 0.0) == n);
    const TokenScores lpos{logs(p), Scale::kLogProbs}, lneg{logs(n), Scale::kLogProbs};
    CHECK(cfg_log_dual(lneg, lpos, 1.0) == lpos.values);
    CHECK(cfg_log_dual(lneg, lpos, 0.0) == lneg.values);
    CHECK(cfg_log_uncond(lneg, lpos, 1.0) == lpos.values);
  }
}

TEST_CASE("probability-space scores stay within [1 - gamma, gamma]") {
  std::mt19937_64 rng(11);
  for (double gamma : {1.0, 1.5, 2.0, 3.0, 5.0, 10.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t v = 2 + rng() % 30;
      const auto s = cfg_prob_dual({random_probs(rng, v), Scale::kProbs}, {random_probs(rng, v), Scale::kProbs}, gamma);
      for (double x : s) {
        CHECK(x >= 1.0 - gamma);
        CHECK(x <= gamma);
      }
    }
  }
}

TEST_CASE("apply_guidance dispatches on the variant") {
  const TokenScores pos{{2.0, 0.0, -1.0}, Scale::kLogits};
  const TokenScores neg{{0.0, 1.0, 0.5}, Scale::kLogits};
  GuidanceSpec spec;
  spec.gamma = 2.0;
  spec.variant = GuidanceVariant::kDualProb;
  CHECK(apply_guidance(spec, neg, pos) == cfg_prob_dual(neg, pos, 2.0));
  spec.variant = GuidanceVariant::kDualLog;
  CHECK(apply_guidance(spec, neg, pos) == cfg_log_dual(neg, pos, 2.0));
  spec.raw_logits = true;
  const auto raw = apply_guidance(spec, neg, pos);
  CHECK(raw[0] == doctest::Approx(0.0 + 2.0 * (2.0 - 0.0)));
  CHECK(raw[1] == doctest::Approx(1.0 + 2.0 * (0.0 - 1.0)));

  CHECK_THROWS_AS(apply_guidance(spec, neg, {{1.0}, Scale::kLogits}), InvalidInput);
  spec.gamma = -1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
}

TEST_CASE("variant names round-trip") {
  for (auto v : {GuidanceVariant::kUncondLog, GuidanceVariant::kDualLog, GuidanceVariant::kDualProb}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("eq7"), InvalidInput);
}

TEST_CASE("greedy selection breaks ties toward the lowest id and rejects NaN") {
  const std::vector<double> tied = {0.1, 0.4, 0.4, 0.1};
  CHECK(select_token(tied, Greedy{}) == 1);
  const std::vector<double> bad = {0.1, std::nan("")};
  CHECK_THROWS_AS(select_token(bad, Greedy{}), InvalidInput);
  CHECK_THROWS_AS(select_token(std::vector<double>{}, Greedy{}), InvalidInput);
}

TEST_CASE("clamped sampling never picks a non-positive score") {
  const std::vector<double> scores = {-0.4, 0.3, 0.0, 0.9};
  std::mt19937_64 rng(3);
  std::vector<int> hits(4, 0);
  constexpr int kDraws = 40000;
  for (int i = 0; i < kDraws; ++i) ++hits[select_token(scores, rng)];
  CHECK(hits[0] == 0);
  CHECK(hits[2] == 0);
  CHECK(static_cast<double>(hits[1]) / kDraws == doctest::Approx(0.25).epsilon(0.05));
  CHECK(static_cast<double>(hits[3]) / kDraws == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("sampling is reproducible per seed and falls back when nothing is positive") {
  const std::vector<double> scores = {0.2, 0.3, 0.5};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(select_token(scores, Sample{seed}) == select_token(scores, Sample{seed}));
  }
  const std::vector<double> dead = {-0.2, 0.0, -1.0};
  const std::vector<double> fallback = {0.1, 0.2, 0.7};
  CHECK(select_token(dead, Sample{1}, fallback) == 2);
  CHECK(select_token(dead, Sample{1}) == 1);
}
