// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "seqattr/ctc/ctc.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/numkit/ops.hpp"
#include "seqattr/numkit/random.hpp"
#include "support/finite_difference.hpp"

namespace seqattr::ctc {
namespace {

PosteriorMatrix random_q(nk::Rng& rng, std::size_t steps, std::size_t classes,
                         double spread = 3.0) {
  std::vector<double> v(steps * classes);
  for (std::size_t t = 0; t < steps; ++t) {
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      v[t * classes + c] = std::exp(rng.uniform(-spread, spread));
      total += v[t * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) v[t * classes + c] /= total;
  }
  return {steps, classes, std::move(v)};
}

std::vector<int> random_labels(nk::Rng& rng, std::size_t len, std::size_t k) {
  std::vector<int> y(len);
  for (int& v : y) v = 1 + static_cast<int>(rng.below(k));
  return y;
}

nk::Tensor random_logits(nk::Rng& rng, std::size_t steps, std::size_t classes) {
  std::vector<double> v(steps * classes);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return nk::Tensor::from({steps, classes}, std::move(v), true);
}

TEST(Collapse, MergesRepeatsThenDropsBlanks) {
  const std::vector<int> a{1, 1, 0, 5, 5, 0, 8};
  EXPECT_EQ(collapse(a), (std::vector<int>{1, 5, 8}));
  const std::vector<int> b{0, 0, 0};
  EXPECT_TRUE(collapse(b).empty());
  const std::vector<int> c{1, 0, 1};
  EXPECT_EQ(collapse(c), (std::vector<int>{1, 1}));
}

TEST(RequiredSteps, CountsAdjacentRepeats) {
  EXPECT_EQ(required_steps(std::vector<int>{1, 2, 3}), 3u);
  EXPECT_EQ(required_steps(std::vector<int>{1, 1, 2, 2}), 6u);
}

TEST(CtcLogProb, SingleStepSinglePath) {
  const PosteriorMatrix q(1, 3, {0.2, 0.3, 0.5});
  EXPECT_NEAR(ctc_log_prob(q, std::vector<int>{2}), std::log(0.5), 1e-15);
}

TEST(CtcLogProb, TwoStepsThreePaths) {
  nk::Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const PosteriorMatrix q = random_q(rng, 2, 4);
    const int a = 1 + static_cast<int>(rng.below(3));
    const double expected = std::log(q(0, a) * q(1, a) + q(0, 0) * q(1, a) + q(0, a) * q(1, 0));
    EXPECT_NEAR(ctc_log_prob(q, std::vector<int>{a}), expected, 1e-14);
  }
}

TEST(CtcLogProb, MatchesBruteForceOnRandomInstances) {
  nk::Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t steps = 1 + rng.below(6);
    const std::size_t k = 1 + rng.below(3);
    const std::size_t u = 1 + rng.below(3);
    const auto y = random_labels(rng, u, k);
    if (required_steps(y) > steps) continue;
    const PosteriorMatrix q = random_q(rng, steps, k + 1);
    EXPECT_LE(std::abs(std::exp(ctc_log_prob(q, y)) - ctc_brute_force(q, y)), 1e-10);
  }
}

TEST(CtcLogProb, T4K3U2AgreesInLogDomain) {
  nk::Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const PosteriorMatrix q = random_q(rng, 4, 4);
    const auto y = random_labels(rng, 2, 3);
    EXPECT_NEAR(ctc_log_prob(q, y), std::log(ctc_brute_force(q, y)), 1e-10);
  }
}

TEST(CtcLogProb, InfeasibleIsAnError) {
  nk::Rng rng(4);
  const PosteriorMatrix q = random_q(rng, 3, 4);
  EXPECT_THROW(ctc_log_prob(q, std::vector<int>{1, 2, 3, 1}), InfeasibleError);
  EXPECT_THROW(ctc_log_prob(q, std::vector<int>{2, 2, 1}), InfeasibleError);
  EXPECT_NO_THROW(ctc_log_prob(q, std::vector<int>{2, 2}));
  EXPECT_THROW(ctc_log_prob(q, std::vector<int>{4}), IndexError);
}

TEST(CtcLogProb, TinyProbabilitiesStayFinite) {
  // Most mass on the blank; labels at 1e-300.
  const std::size_t steps = 6, classes = 4;
  std::vector<double> v(steps * classes, 1e-300);
  for (std::size_t t = 0; t < steps; ++t) v[t * classes] = 1.0 - 3e-300;
  const PosteriorMatrix q(steps, classes, v);
  const double lp = ctc_log_prob(q, std::vector<int>{1, 2, 3});
  EXPECT_FALSE(std::isnan(lp));
  EXPECT_NEAR(lp, ctc_log_prob(q, std::vector<int>{3, 2, 1}), 1e-9);
  EXPECT_LT(lp, -2000.0);
}

TEST(CtcLogProb, PermutationCovariant) {
  nk::Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::size_t steps = 2 + rng.below(5), k = 3;
    const PosteriorMatrix q = random_q(rng, steps, k + 1);
    auto y = random_labels(rng, 1 + rng.below(2), k);
    if (required_steps(y) > steps) continue;
    std::vector<int> perm{1, 2, 3};
    rng.shuffle(perm);
    std::vector<double> pv(steps * (k + 1));
    for (std::size_t t = 0; t < steps; ++t) {
      pv[t * (k + 1)] = q(t, 0);
      for (int c = 1; c <= 3; ++c) pv[t * (k + 1) + perm[c - 1]] = q(t, c);
    }
    const PosteriorMatrix qp(steps, k + 1, pv);
    std::vector<int> yp;
    for (int v : y) yp.push_back(perm[v - 1]);
    EXPECT_NEAR(ctc_log_prob(q, y), ctc_log_prob(qp, yp), 1e-12);
  }
}

TEST(CtcBruteForce, DistributionSumsToOne) {
  nk::Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const PosteriorMatrix q = random_q(rng, 1 + rng.below(5), 2 + rng.below(3));
    double total = 0.0;
    for (const auto& [y, p] : ctc_brute_force_distribution(q)) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(CtcBruteForce, ThreePathsForTwoStepsOneLabel) {
  const PosteriorMatrix q(2, 2, {0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(ctc_brute_force(q, std::vector<int>{1}), 3 * 0.25, 1e-15);
}

TEST(CtcBruteForce, GuardRejectsLargeInstances) {
  std::vector<double> v(12 * 4, 0.25);
  const PosteriorMatrix q(12, 4, v);
  EXPECT_THROW(ctc_brute_force(q, std::vector<int>{1}), ContractError);
}

TEST(PosteriorMatrix, RejectsNonStochasticRows) {
  EXPECT_THROW(PosteriorMatrix(1, 2, {0.5, 0.6}), ContractError);
  EXPECT_THROW(PosteriorMatrix(1, 2, {-0.5, 1.5}), ContractError);
}

TEST(CtcLoss, UniformBinaryIsLn2) {
  const nk::Tensor logits = nk::Tensor::matrix({{0.0, 0.0}});
  EXPECT_NEAR(ctc_loss(logits, std::vector<int>{1}).item(), std::log(2.0), 1e-15);
}

TEST(CtcLoss, AgreesWithLogProb) {
  nk::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const std::size_t steps = 1 + rng.below(8), k = 1 + rng.below(4);
    const auto y = random_labels(rng, 1 + rng.below(3), k);
    if (required_steps(y) > steps) continue;
    const nk::Tensor logits = random_logits(rng, steps, k + 1);
    EXPECT_NEAR(ctc_loss(logits, y).item(),
                -ctc_log_prob(PosteriorMatrix::from_logits(logits), y), 1e-12);
  }
}

TEST(CtcLoss, GradientMatchesFiniteDifferences) {
  nk::Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const std::size_t steps = 5;
    const auto y = random_labels(rng, 1 + rng.below(3), 3);
    nk::Tensor logits = random_logits(rng, steps, 4);
    const auto r = testing::check_gradients({logits}, [&] { return ctc_loss(logits, y); });
    EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
  }
}

TEST(CtcLoss, GradientWithRepeatsAndTightLength) {
  nk::Rng rng(9);
  const std::vector<int> y{2, 2, 1};
  nk::Tensor logits = random_logits(rng, 4, 3);
  const auto r = testing::check_gradients({logits}, [&] { return ctc_loss(logits, y); });
  EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
  nk::Tensor exact = random_logits(rng, 3, 4);
  const std::vector<int> z{3, 1, 2};
  const auto r2 = testing::check_gradients({exact}, [&] { return ctc_loss(exact, z); });
  EXPECT_LE(r2.max_rel_error, 1e-5) << r2.worst;
}

TEST(CtcLoss, DecreasesUnderGradientDescent) {
  nk::Rng rng(10);
  nk::Tensor logits = random_logits(rng, 6, 4);
  const std::vector<int> y{1, 3, 2};
  double previous = std::numeric_limits<double>::infinity();
  double first = 0.0;
  for (int step = 0; step < 50; ++step) {
    logits.zero_grad();
    nk::Tape tape;
    double value = 0.0;
    {
      nk::Tape::Scope scope(tape);
      nk::Tensor loss = ctc_loss(logits, y);
      value = loss.item();
      nk::backward(loss, tape);
    }
    if (step == 0) first = value;
    EXPECT_LT(value, previous) << "step " << step;
    previous = value;
    auto v = logits.mutable_values();
    const auto g = logits.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.5 * g[i];
  }
  EXPECT_LT(previous, 0.25 * first);
}

TEST(CtcLoss, InfeasibleIsAnError) {
  nk::Rng rng(11);
  EXPECT_THROW(ctc_loss(random_logits(rng, 2, 4), std::vector<int>{1, 2, 3}), InfeasibleError);
}

TEST(GreedyDecode, OneHotRows) {
  std::vector<double> v(4 * 6, 0.0);
  const int best[] = {1, 1, 0, 5};
  for (int t = 0; t < 4; ++t) v[t * 6 + best[t]] = 1.0;
  EXPECT_EQ(ctc_greedy_decode(PosteriorMatrix(4, 6, v)), (std::vector<int>{1, 5}));
}

TEST(GreedyDecode, AllBlankAndTies) {
  const PosteriorMatrix blank(2, 3, {0.8, 0.1, 0.1, 0.6, 0.2, 0.2});
  EXPECT_TRUE(ctc_greedy_decode(blank).empty());
  const PosteriorMatrix tie(1, 3, {0.2, 0.4, 0.4});
  EXPECT_EQ(ctc_greedy_decode(tie), (std::vector<int>{1}));
  EXPECT_EQ(ctc_greedy_decode(nk::Tensor::matrix({{0.0, 2.0, 2.0}})), (std::vector<int>{1}));
}

}  // namespace
}  // namespace seqattr::ctc
