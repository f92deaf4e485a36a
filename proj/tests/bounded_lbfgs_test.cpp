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

#include "arena/bounded_lbfgs.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gtest/gtest.h"

namespace arena {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double Rosenbrock(std::span<const double> x, std::span<double> g) {
  double f = 0.0;
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    f += 100.0 * a * a + b * b;
    g[i] += -400.0 * x[i] * a - 2.0 * b;
    g[i + 1] += 200.0 * a;
  }
  return f;
}

TEST(BoundedLbfgsTest, UnconstrainedRosenbrock) {
  const std::vector<double> lower(4, -kInf), upper(4, kInf);
  const auto result =
      MinimizeBounded(Rosenbrock, {-1.2, 1.0, -1.2, 1.0}, lower, upper);
  EXPECT_TRUE(result.converged) << result.message;
  for (double x : result.x) EXPECT_NEAR(x, 1.0, 1e-4);
}

TEST(BoundedLbfgsTest, ActiveUpperBound) {
  // Minimum of Rosenbrock restricted to x_0 <= 0.5 lies on the bound.
  const std::vector<double> lower = {-kInf, -kInf};
  const std::vector<double> upper = {0.5, kInf};
  const auto result = MinimizeBounded(Rosenbrock, {-1.0, 2.0}, lower, upper);
  EXPECT_TRUE(result.converged) << result.message;
  EXPECT_DOUBLE_EQ(result.x[0], 0.5);
  EXPECT_NEAR(result.x[1], 0.25, 1e-5);
}

TEST(BoundedLbfgsTest, SeparableQuadraticWithMixedBounds) {
  // f = sum (x_i - c_i)^2 with c outside the box on some coordinates.
  const std::vector<double> c = {-3.0, 0.5, 7.0, 2.0};
  auto f = [&](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v += (x[i] - c[i]) * (x[i] - c[i]);
      g[i] = 2.0 * (x[i] - c[i]);
    }
    return v;
  };
  const std::vector<double> lower = {-1.0, -1.0, -1.0, -kInf};
  const std::vector<double> upper = {1.0, 1.0, 5.0, kInf};
  const auto result = MinimizeBounded(f, {0.0, 0.0, 0.0, 0.0}, lower, upper);
  EXPECT_TRUE(result.converged);
  EXPECT_DOUBLE_EQ(result.x[0], -1.0);
  EXPECT_NEAR(result.x[1], 0.5, 1e-8);
  EXPECT_DOUBLE_EQ(result.x[2], 5.0);
  EXPECT_NEAR(result.x[3], 2.0, 1e-8);
  EXPECT_LT(result.projected_gradient_norm, 1e-6);
}

TEST(BoundedLbfgsTest, StartOutsideBoxIsProjected) {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  const std::vector<double> lower = {1.0}, upper = {2.0};
  const auto result = MinimizeBounded(f, {10.0}, lower, upper);
  EXPECT_DOUBLE_EQ(result.x[0], 1.0);
  EXPECT_TRUE(result.converged);
}

TEST(BoundedLbfgsTest, ReportsIterationLimit) {
  const std::vector<double> lower(2, -kInf), upper(2, kInf);
  BoundedLbfgsOptions options;
  options.max_iterations = 2;
  const auto result =
      MinimizeBounded(Rosenbrock, {-1.2, 1.0}, lower, upper, options);
  EXPECT_FALSE(result.converged);
  EXPECT_EQ(result.iterations, 2);
}

}  // namespace
}  // namespace arena
