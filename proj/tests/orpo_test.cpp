// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "cfgu/error.hpp"
#include "cfgu/orpo.hpp"

using namespace cfgu;

namespace {

std::vector<double> random_logprobs(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("identical completions give ln 2") {
  const std::vector<double> lp = {-0.3, -1.2, -0.01};
  const OrpoLoss loss = odds_ratio_loss(lp, lp);
  CHECK(loss.or_term == std::log(2.0));
  CHECK(loss.nll == doctest::Approx((0.3 + 1.2 + 0.01) / 3));
}

TEST_CASE("beta defaults to 0.1 and weights the odds-ratio term") {
  CHECK(OrpoConfig{}.beta == 0.1);
  const std::vector<double> c = {-0.2, -0.4}, r = {-1.5, -2.5};
  const OrpoLoss loss = odds_ratio_loss(c, r);
  CHECK(loss.total == doctest::Approx(loss.nll + 0.1 * loss.or_term).epsilon(1e-15));
  OrpoConfig heavy;
  heavy.beta = 1.0;
  CHECK(odds_ratio_loss(c, r, heavy).total == doctest::Approx(loss.nll + loss.or_term));
}

TEST_CASE("hand-computed odds ratio") {
  // p_c = 0.5, p_r = 0.2: log odds 0 and log(0.25); or = -log sigmoid(log 4) = log(1.25).
  const std::vector<double> c = {std::log(0.5)}, r = {std::log(0.2)};
  const OrpoLoss loss = odds_ratio_loss(c, r);
  CHECK(loss.or_term == doctest::Approx(std::log(1.25)).epsilon(1e-12));
  CHECK(loss.nll == doctest::Approx(std::log(2.0)));
}

TEST_CASE("odds-ratio term falls as chosen improves and rises as rejected improves") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> step(0.01, 0.5);
  for (int i = 0; i < 1000; ++i) {
    auto c = random_logprobs(rng, 1 + rng() % 6, -6.0, -0.05);
    auto r = random_logprobs(rng, 1 + rng() % 6, -6.0, -0.05);
    const double base = odds_ratio_loss(c, r).or_term;
    auto c_better = c;
    for (double& x : c_better) x = std::min(-1e-3, x + step(rng));
    auto r_better = r;
    for (double& x : r_better) x = std::min(-1e-3, x + step(rng));
    CHECK(odds_ratio_loss(c_better, r).or_term <= base);
    CHECK(odds_ratio_loss(c, r_better).or_term >= base);
  }
}

TEST_CASE("derivative matches finite differences") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_logprobs(rng, 4, -3.0, -0.1);
    const auto r = random_logprobs(rng, 3, -3.0, -0.1);
    const double n = static_cast<double>(c.size());
    const double lc = avg_logprob(c), lr = avg_logprob(r);
    const double pc = std::exp(lc);
    const double ratio = log_odds(lc) - log_odds(lr);
    // d or_term / d c[0] = -(1 - sigmoid(ratio)) / (1 - p_c) / n
    const double analytic = -(1.0 - sigmoid(ratio)) / (1.0 - pc) / n;

    const double h = 1e-6;
    auto up = c, down = c;
    up[0] += h;
    down[0] -= h;
    const double fd = (odds_ratio_loss(up, r).or_term - odds_ratio_loss(down, r).or_term) / (2 * h);
    CHECK(std::abs(fd - analytic) < 1e-5);

    const double nll_fd = (odds_ratio_loss(up, r).nll - odds_ratio_loss(down, r).nll) / (2 * h);
    CHECK(std::abs(nll_fd + 1.0 / n) < 1e-5);
  }
}

TEST_CASE("softplus is stable in both tails") {
  CHECK(neg_log_sigmoid(0.0) == std::log(2.0));
  CHECK(neg_log_sigmoid(800.0) == doctest::Approx(0.0));
  CHECK(neg_log_sigmoid(-800.0) == doctest::Approx(800.0));
  CHECK(std::isfinite(neg_log_sigmoid(-1e6)));
}

TEST_CASE("clamping keeps log odds finite") {
  CHECK(std::isfinite(log_odds(0.0)));
  CHECK(log_odds(0.0) == doctest::Approx(std::log((1 - 1e-8) / 1e-8)));
  CHECK(std::isfinite(log_odds(-1000.0)));
  const std::vector<double> sure = {0.0, 0.0}, hopeless = {-900.0};
  CHECK(std::isfinite(odds_ratio_loss(sure, hopeless).total));
}

TEST_CASE("summed log-probs when length normalization is off") {
  const std::vector<double> c = {-0.1, -0.1, -0.1, -0.1}, r = {-0.3};
  OrpoConfig sum;
  sum.length_normalize = false;
  const OrpoLoss a = odds_ratio_loss(c, r, sum);
  CHECK(a.or_term == doctest::Approx(neg_log_sigmoid(log_odds(-0.4) - log_odds(-0.3))));
  CHECK(a.nll == doctest::Approx(0.1));
}

TEST_CASE("invalid input is rejected") {
  const std::vector<double> ok = {-0.5};
  CHECK_THROWS_AS(odds_ratio_loss(std::vector<double>{}, ok), InvalidInput);
  CHECK_THROWS_AS(odds_ratio_loss(std::vector<double>{0.5}, ok), InvalidInput);
  CHECK_THROWS_AS(odds_ratio_loss(std::vector<double>{std::nan("")}, ok), InvalidInput);
  OrpoConfig bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(odds_ratio_loss(ok, ok, bad), InvalidInput);
}
