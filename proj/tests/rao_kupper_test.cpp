// Copyright 2026 The Arena Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "arena/rao_kupper.hpp"

#include <cmath>
#include <vector>

#include "arena/random.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace arena {
namespace {

TEST(ProbWinTest, Examples) {
  EXPECT_DOUBLE_EQ(ProbWin(1, 1, 1), 0.5);
  EXPECT_DOUBLE_EQ(ProbWin(3, 1, 2), 0.6);
}

TEST(ProbWinTest, MatchesLogisticForm) {
  RandomStream rng(11);
  for (int k = 0; k < 1000; ++k) {
    const double v_i = rng.Uniform() * 8 - 4;
    const double v_j = rng.Uniform() * 8 - 4;
    const double tau = rng.Uniform() * 5;
    const double logistic = 1.0 / (1.0 + std::exp(tau - (v_i - v_j)));
    EXPECT_NEAR(ProbWin(std::exp(v_i), std::exp(v_j), std::exp(tau)),
                logistic, 1e-12);
  }
}

TEST(ProbWinTest, MatchesSechSquaredQuadrature) {
  for (double d : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    for (double tau : {0.01, 0.3, 1.0, 4.0}) {
      EXPECT_NEAR(ProbWin(std::exp(d), 1.0, std::exp(tau)),
                  oracle::WinByQuadrature(d, tau), 1e-8)
          << "d=" << d << " tau=" << tau;
      EXPECT_NEAR(ProbTie(std::exp(d), 1.0, std::exp(tau)),
                  oracle::TieByQuadrature(d, tau), 1e-8)
          << "d=" << d << " tau=" << tau;
    }
  }
}

TEST(ProbTieTest, Examples) {
  for (double p : {0.01, 1.0, 37.0}) EXPECT_EQ(ProbTie(p, 2.0, 1.0), 0.0);
  EXPECT_NEAR(ProbTie(1, 1, 2), 1.0 / 3.0, 1e-15);
  const double theta = std::exp(0.01);
  EXPECT_DOUBLE_EQ(ProbTie(2, 1, theta), ProbTie(1, 2, theta));
}

TEST(ProbTest, DomainErrors) {
  EXPECT_THROW(ProbWin(0, 1, 1.5), std::domain_error);
  EXPECT_THROW(ProbWin(1, -1, 1.5), std::domain_error);
  EXPECT_THROW(ProbTie(1, 1, 0.5), std::domain_error);
}

TEST(ProbTest, ProbabilitiesSumToOne) {
  RandomStream rng(3);
  for (int k = 0; k < 10000; ++k) {
    const double p_i = std::exp(rng.Uniform() * 12 - 6);
    const double p_j = std::exp(rng.Uniform() * 12 - 6);
    const double theta = std::exp(rng.Uniform() * 10);
    const double sum =
        ProbWin(p_i, p_j, theta) + ProbWin(p_j, p_i, theta) +
        ProbTie(p_i, p_j, theta);
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(LogLikelihoodTest, ZeroTallyIsZero) {
  PairCounts counts(3);
  const std::vector<double> p = {0.5, 1.0, 2.0};
  EXPECT_EQ(LogLikelihood(counts, p, 1.7), 0.0);
  const auto grad = LikelihoodGradient(counts, p, 1.7);
  for (double g : grad) EXPECT_EQ(g, 0.0);
}

TEST(LogLikelihoodTest, SingleWinNearNoTieLimit) {
  PairCounts counts(2);
  counts.wins[0 * 2 + 1] = 1;
  const std::vector<double> p = {1.0, 1.0};
  EXPECT_NEAR(LogLikelihood(counts, p, 1.0 + 1e-9), std::log(0.5), 1e-8);
}

TEST(LogLikelihoodTest, MatchesTermByTermSummation) {
  PairCounts counts(2);
  counts.wins[0 * 2 + 1] = 3;
  counts.wins[1 * 2 + 0] = 1;
  const std::vector<double> p = {3.0, 1.0};
  const double theta = std::exp(0.01);
  EXPECT_NEAR(LogLikelihood(counts, p, theta),
              oracle::LogLikelihoodBySummation(counts, p, theta), 1e-10);
}

TEST(LogLikelihoodTest, RandomTalliesMatchSummation) {
  RandomStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const PairCounts counts = oracle::RandomCounts(rng, 2 + rng.Below(5), 15);
    std::vector<double> p(counts.size);
    for (double& x : p) x = std::exp(rng.Uniform() * 6 - 3);
    const double theta = std::exp(0.01 + rng.Uniform() * 3);
    const double expected = oracle::LogLikelihoodBySummation(counts, p, theta);
    EXPECT_NEAR(LogLikelihood(counts, p, theta), expected,
                1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(LogLikelihoodTest, TiesRequireThetaAboveOne) {
  PairCounts counts(2);
  counts.ties[1] = counts.ties[2] = 1;
  const std::vector<double> p = {1.0, 1.0};
  EXPECT_THROW(LogLikelihood(counts, p, 1.0), std::domain_error);
}

TEST(LogLikelihoodTest, ScaleInvariance) {
  RandomStream rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const PairCounts counts = oracle::RandomCounts(rng, 4, 20);
    std::vector<double> p(4);
    for (double& x : p) x = std::exp(rng.Uniform() * 4 - 2);
    const double theta = 1.0 + rng.Uniform() * 3;
    const double c = std::exp(rng.Uniform() * 10 - 5);
    std::vector<double> scaled = p;
    for (double& x : scaled) x *= c;
    EXPECT_NEAR(LogLikelihood(counts, p, theta),
                LogLikelihood(counts, scaled, theta), 1e-9);
  }
}

TEST(GradientTest, SymmetricTallyAtSymmetricPoint) {
  PairCounts counts(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      counts.wins[i * 4 + j] = 3;
      counts.ties[i * 4 + j] = 3;
    }
  }
  const std::vector<double> p(4, 1.0);
  const auto grad = LikelihoodGradient(counts, p, 1.4);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(grad[i], grad[0]);
}

TEST(GradientTest, MatchesCentralDifferences) {
  RandomStream rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const PairCounts counts = oracle::RandomCounts(rng, 2 + rng.Below(5), 30);
    std::vector<double> p(counts.size);
    for (double& x : p) x = std::exp(rng.Uniform() * 4 - 2);
    const double theta = std::exp(0.05 + rng.Uniform() * 2);
    const auto grad = LikelihoodGradient(counts, p, theta);
    const auto fd = oracle::CentralDifferenceGradient(counts, p, theta, 1e-6);
    EXPECT_LE(oracle::RelativeError(grad, fd), 1e-5) << "trial " << trial;
  }
}

}  // namespace
}  // namespace arena
