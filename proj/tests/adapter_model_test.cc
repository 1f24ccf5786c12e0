// Copyright 2026 The privfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "privfed/adapter_model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "privfed/errors.h"

namespace privfed::model {
namespace {

AdapterParams RandomAdapters(const ModelSpec& spec, std::mt19937_64& rng,
                             double scale = 0.5) {
  std::normal_distribution<double> normal(0.0, scale);
  AdapterParams p = AdapterParams::Zero(spec);
  for (Eigen::Index i = 0; i < p.a.size(); ++i) p.a.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < p.head_w.size(); ++i) p.head_w(i) = normal(rng);
  p.head_b = normal(rng);
  return p;
}

LabeledExample RandomExample(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  LabeledExample ex{Eigen::VectorXd(static_cast<Eigen::Index>(d)),
                    static_cast<int>(rng() % 2)};
  for (Eigen::Index i = 0; i < ex.x.size(); ++i) ex.x(i) = normal(rng);
  return ex;
}

double SegmentRelativeError(std::span<const double> analytic,
                            std::span<const double> numeric) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    norm += analytic[i] * analytic[i];
  }
  if (norm == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / norm);
}

TEST(ModelSpecTest, RejectsInvalidDimensions) {
  EXPECT_THROW((ModelSpec{0, 4, 1, 0}.Validate()), ConfigError);
  EXPECT_THROW((ModelSpec{4, 0, 1, 0}.Validate()), ConfigError);
  EXPECT_THROW((ModelSpec{4, 4, 0, 0}.Validate()), ConfigError);
  EXPECT_THROW(FrozenBackbone::Build({4, 3, 4, 7}), ConfigError);
  EXPECT_NO_THROW((ModelSpec{4, 3, 3, 0}.Validate()));
}

TEST(BuildBackboneTest, DeterministicInSeed) {
  const ModelSpec spec{4, 4, 1, 7};
  EXPECT_EQ(FrozenBackbone::Build(spec).weights(), FrozenBackbone::Build(spec).weights());
  ModelSpec other = spec;
  other.seed = 8;
  EXPECT_NE(FrozenBackbone::Build(spec).weights(), FrozenBackbone::Build(other).weights());
}

TEST(BuildBackboneTest, FanInNormsConcentrateNearOne) {
  // Each output feature contracts d = 16 entries of scale 1/sqrt(d) with x,
  // so the per-feature weight vectors have E||w||^2 = 1. Check the empirical
  // distribution over 100 seeds.
  std::vector<double> norms;
  double entry_sum = 0.0;
  std::size_t entries = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const Eigen::MatrixXd w = FrozenBackbone::Build({16, 8, 2, seed}).weights();
    ASSERT_EQ(w.rows(), 8);
    ASSERT_EQ(w.cols(), 16);
    for (Eigen::Index i = 0; i < w.rows(); ++i) norms.push_back(w.row(i).norm());
    entry_sum += w.sum();
    entries += static_cast<std::size_t>(w.size());
  }
  double mean_sq = 0.0, mean = 0.0;
  for (double n : norms) {
    mean_sq += n * n;
    mean += n;
  }
  mean_sq /= static_cast<double>(norms.size());
  mean /= static_cast<double>(norms.size());
  EXPECT_NEAR(mean_sq, 1.0, 0.05);
  EXPECT_NEAR(mean, 1.0, 0.05);
  std::sort(norms.begin(), norms.end());
  EXPECT_GT(norms[norms.size() / 20], 0.6);
  EXPECT_LT(norms[norms.size() * 19 / 20], 1.4);
  EXPECT_NEAR(entry_sum / static_cast<double>(entries), 0.0, 0.01);
}

TEST(EffectiveWeightTest, ZeroUpdateLeavesBackbone) {
  const FrozenBackbone bb = FrozenBackbone::Build({5, 3, 2, 1});
  AdapterParams p = AdapterParams::Init(bb.spec(), 9);
  ASSERT_TRUE(p.b.isZero());
  EXPECT_EQ(EffectiveWeight(bb, p), bb.weights());
}

TEST(EffectiveWeightTest, IdentityComposition) {
  // Any backbone; subtract it out so W0 contributes zero.
  const FrozenBackbone bb = FrozenBackbone::Build({3, 3, 3, 2});
  std::mt19937_64 rng(4);
  AdapterParams p = RandomAdapters(bb.spec(), rng);
  p.b = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_TRUE((EffectiveWeight(bb, p) - bb.weights()).isApprox(p.a, 1e-15));
}

TEST(EffectiveWeightTest, MatchesTripleLoop) {
  const FrozenBackbone bb = FrozenBackbone::Build({3, 2, 1, 11});
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const AdapterParams p = RandomAdapters(bb.spec(), rng, 1.0);
    const Eigen::MatrixXd expected = testing::BruteForceEffectiveWeight(bb.weights(), p);
    const Eigen::MatrixXd got = EffectiveWeight(bb, p);
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), expected(i, j), 1e-15);
    }
  }
}

TEST(EffectiveWeightTest, AffineInAForFixedB) {
  const FrozenBackbone bb = FrozenBackbone::Build({6, 4, 2, 3});
  std::mt19937_64 rng(6);
  AdapterParams p1 = RandomAdapters(bb.spec(), rng);
  AdapterParams p2 = p1;
  p2.a = RandomAdapters(bb.spec(), rng).a;
  const double alpha = 0.3, beta = 0.7;  // affine combination
  AdapterParams mix = p1;
  mix.a = alpha * p1.a + beta * p2.a;
  const Eigen::MatrixXd lhs = EffectiveWeight(bb, mix);
  const Eigen::MatrixXd rhs = alpha * EffectiveWeight(bb, p1) + beta * EffectiveWeight(bb, p2);
  EXPECT_TRUE(lhs.isApprox(rhs, 1e-13));
}

TEST(EffectiveWeightTest, ShapeMismatchIsConfigError) {
  const FrozenBackbone bb = FrozenBackbone::Build({4, 3, 2, 1});
  AdapterParams p = AdapterParams::Zero({4, 3, 1, 0});
  EXPECT_THROW(EffectiveWeight(bb, p), ConfigError);
}

TEST(ForwardTest, ZeroAdaptersGiveOneHalf) {
  const FrozenBackbone bb = FrozenBackbone::Build({4, 3, 2, 1});
  const AdapterParams p = AdapterParams::Zero(bb.spec());
  EXPECT_EQ(Forward(bb, p, Eigen::VectorXd::LinSpaced(4, -3, 5)), 0.5);
}

TEST(ForwardTest, SaturatesWithLargeBias) {
  const FrozenBackbone bb = FrozenBackbone::Build({4, 3, 2, 1});
  AdapterParams p = AdapterParams::Zero(bb.spec());
  p.head_b = 800.0;
  EXPECT_EQ(Forward(bb, p, Eigen::VectorXd::Ones(4)), 1.0);
  p.head_b = -800.0;
  EXPECT_EQ(Forward(bb, p, Eigen::VectorXd::Ones(4)), 0.0);
}

TEST(ForwardTest, HandComputedSmallInstance) {
  // d = k = 2, r = 1. W0 taken from the built backbone; adapters hand-set.
  const FrozenBackbone bb = FrozenBackbone::Build({2, 2, 1, 42});
  const Eigen::MatrixXd& w0 = bb.weights();
  AdapterParams p = AdapterParams::Zero(bb.spec());
  p.a << 0.5, -1.0;
  p.b << 2.0, 0.25;
  p.head_w << 1.5, -0.5;
  p.head_b = 0.1;
  const double x0 = 0.3, x1 = -0.7;
  // h = A x; f_i = sum_j W0_ij x_j + B_i h
  const double h = 0.5 * x0 - 1.0 * x1;
  const double f0 = w0(0, 0) * x0 + w0(0, 1) * x1 + 2.0 * h;
  const double f1 = w0(1, 0) * x0 + w0(1, 1) * x1 + 0.25 * h;
  const double z = 1.5 * f0 - 0.5 * f1 + 0.1;
  const double expected = 1.0 / (1.0 + std::exp(-z));
  Eigen::VectorXd x(2);
  x << x0, x1;
  EXPECT_NEAR(Forward(bb, p, x), expected, 1e-15);
}

TEST(ForwardTest, NonFiniteInputIsInputError) {
  const FrozenBackbone bb = FrozenBackbone::Build({2, 2, 1, 1});
  Eigen::VectorXd x(2);
  x << 1.0, std::nan("");
  EXPECT_THROW(Forward(bb, AdapterParams::Zero(bb.spec()), x), InputError);
  EXPECT_THROW(Forward(bb, AdapterParams::Zero(bb.spec()), Eigen::VectorXd::Zero(3)),
               ConfigError);
}

TEST(GradientTest, MatchesFiniteDifferencesOnRandomDraws) {
  std::mt19937_64 rng(2024);
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t d = 2 + rng() % 10;
    const std::size_t k = 1 + rng() % 8;
    const std::size_t r = 1 + rng() % std::min(d, k);
    const FrozenBackbone bb = FrozenBackbone::Build({d, k, r, rng()});
    const AdapterParams p = RandomAdapters(bb.spec(), rng);
    const LabeledExample ex = RandomExample(d, rng);
    const ParamVector g = PerSampleGradient(bb, p, ex);
    const std::vector<double> fd = testing::FiniteDifferenceGradient(bb, p, ex);
    for (const Segment& s : g.layout()->segments()) {
      const double err = SegmentRelativeError(
          g.values().subspan(s.offset, s.length),
          std::span<const double>(fd).subspan(s.offset, s.length));
      EXPECT_LE(err, 1e-5) << "draw " << draw << " segment " << s.name;
    }
  }
}

TEST(GradientTest, VanishesOnSaturatedCorrectPrediction) {
  const FrozenBackbone bb = FrozenBackbone::Build({4, 3, 2, 1});
  std::mt19937_64 rng(1);
  AdapterParams p = RandomAdapters(bb.spec(), rng);
  p.head_b = 100.0;
  const LabeledExample ex{Eigen::VectorXd::Constant(4, 0.1), 1};
  ASSERT_EQ(Forward(bb, p, ex.x), 1.0);
  const ParamVector g = PerSampleGradient(bb, p, ex);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(GradientTest, OppositeLabelsAtHalfGiveNegatedGradients) {
  const FrozenBackbone bb = FrozenBackbone::Build({4, 3, 2, 5});
  std::mt19937_64 rng(8);
  AdapterParams p = RandomAdapters(bb.spec(), rng);
  p.head_w.setZero();
  p.head_b = 0.0;  // p = 0.5 regardless of x
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1, 2);
  const ParamVector g0 = PerSampleGradient(bb, p, {x, 0});
  const ParamVector g1 = PerSampleGradient(bb, p, {x, 1});
  for (std::size_t i = 0; i < g0.size(); ++i) EXPECT_EQ(g0[i], -g1[i]);
  EXPECT_EQ(g0.segment(kHeadB)[0], 0.5);
}

TEST(AdapterParamsTest, FlattenUnflattenIsBitwiseIdentity) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng() % 12;
    const std::size_t k = 1 + rng() % 12;
    const ModelSpec spec{d, k, 1 + rng() % std::min(d, k), 0};
    const AdapterParams p = RandomAdapters(spec, rng, 3.0);
    const ParamVector flat = p.Flatten();
    EXPECT_EQ(flat.size(), static_cast<std::size_t>(CountParams(spec).trainable));
    EXPECT_TRUE(AdapterParams::Unflatten(flat, spec) == p);
  }
}

TEST(AdapterParamsTest, UnflattenRejectsForeignLayout) {
  const ParamVector v(ParamLayout::FromSizes({{"x", 57}}));
  EXPECT_THROW(AdapterParams::Unflatten(v, {16, 8, 2, 0}), ConfigError);
}

TEST(ParamCountsTest, FormulaAndReportingMode) {
  const ParamCounts c = CountParams(ModelSpec{16, 8, 2, 0});
  EXPECT_EQ(c.trainable, 57);
  EXPECT_EQ(c.total, 8 * 16 + 57);
  EXPECT_DOUBLE_EQ(c.fraction, 57.0 / 185.0);

  const ParamCounts reported = CountParams(5.5e6, 156e6);
  EXPECT_NEAR(reported.fraction, 0.0353, 5e-5);

  // Full-rank square adapters outnumber the backbone.
  const ParamCounts full = CountParams(ModelSpec{10, 10, 10, 0});
  EXPECT_GT(full.trainable, full.total / 2);
  EXPECT_EQ(full.fraction, full.trainable / full.total);
}

}  // namespace
}  // namespace privfed::model
