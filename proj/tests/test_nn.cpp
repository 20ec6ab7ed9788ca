#include <gtest/gtest.h>

#include <cmath>

#include "saec/nn.hpp"
#include "saec/ops.hpp"
#include "test_util.hpp"

using namespace saec;

TEST(Init, UniformFanInBoundsAndZeroBias) {
  ArchitectureSpec spec{{"w", {64, 16}, 64, false}, {"b", {16}, 0, true}};
  ParamSet p = init_params(spec, 3);
  const double bound = std::sqrt(1.0 / 64.0);
  double lo = 1, hi = -1;
  for (double v : p.at("w").data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -bound);
  EXPECT_LE(hi, bound);
  EXPECT_LT(lo, -0.8 * bound);
  EXPECT_GT(hi, 0.8 * bound);
  for (double v : p.at("b").data()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(p.at("w").requires_grad());
}

TEST(Init, SeedDeterminesValues) {
  ArchitectureSpec spec{{"w", {8, 8}, 8, false}};
  EXPECT_EQ(saec::testing::values(init_params(spec, 5).at("w")), saec::testing::values(init_params(spec, 5).at("w")));
  EXPECT_NE(saec::testing::values(init_params(spec, 5).at("w")), saec::testing::values(init_params(spec, 6).at("w")));
  EXPECT_THROW(init_params({{"w", {2}, 0, false}}, 1), std::invalid_argument);
}

TEST(ParamSet, KeepsInsertionOrderAndRejectsDuplicates) {
  ParamSet p;
  p.add("b", Tensor::zeros({1}));
  p.add("a", Tensor::zeros({2}));
  EXPECT_EQ(p.begin()->first, "b");
  EXPECT_EQ(p.scalar_count(), 3u);
  EXPECT_THROW(p.add("a", Tensor::zeros({1})), std::invalid_argument);
  EXPECT_THROW(p.at("c"), std::out_of_range);
}

TEST(ParamSet, CloneIsDeepDetachedIsFrozen) {
  ParamSet p;
  p.add("w", Tensor::from({2}, {1, 2}, true));
  ParamSet c = p.clone();
  ParamSet d = p.detached();
  c.at("w").mutable_data()[0] = 9;
  EXPECT_DOUBLE_EQ(p.at("w")[0], 1.0);
  EXPECT_TRUE(c.at("w").requires_grad());
  EXPECT_FALSE(d.at("w").requires_grad());
  EXPECT_TRUE(p.same_layout(d));
}

TEST(Adam, TwoStepsMatchHandComputation) {
  ParamSet p;
  p.add("w", Tensor::from({1}, {1.0}, true));
  OptimizerConfig cfg;
  cfg.lr = 0.1;
  OptimizerState st = make_optimizer_state(p, cfg);
  p.at("w").mutable_grad()[0] = 0.5;
  optimizer_step(p, st);
  // m_hat = 0.5, v_hat = 0.25 on both steps
  const double step = 0.1 * 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(p.at("w")[0], 1.0 - step, 1e-15);
  optimizer_step(p, st);
  EXPECT_NEAR(p.at("w")[0], 1.0 - 2 * step, 1e-14);
  EXPECT_EQ(st.step, 2u);
  EXPECT_NEAR(st.first_moment[0][0], 0.095, 1e-15);
  EXPECT_NEAR(st.second_moment[0][0], 0.00049975, 1e-15);
}

TEST(Sgd, PlainGradientStep) {
  ParamSet p;
  p.add("w", Tensor::from({2}, {1.0, -1.0}, true));
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::sgd;
  cfg.lr = 0.25;
  OptimizerState st = make_optimizer_state(p, cfg);
  p.at("w").mutable_grad()[0] = 2.0;
  p.at("w").mutable_grad()[1] = -4.0;
  optimizer_step(p, st);
  EXPECT_DOUBLE_EQ(p.at("w")[0], 0.5);
  EXPECT_DOUBLE_EQ(p.at("w")[1], 0.0);
}

TEST(Optimizer, MissingGradientIsAnError) {
  ParamSet p;
  p.add("w", Tensor::from({1}, {1.0}, true));
  OptimizerState st = make_optimizer_state(p, {});
  EXPECT_THROW(optimizer_step(p, st), GradError);
}

TEST(Optimizer, ZeroLearningRateIsFixedPoint) {
  ParamSet p = init_params({{"w", {4, 4}, 4, false}}, 2);
  auto before = saec::testing::values(p.at("w"));
  OptimizerConfig cfg;
  cfg.lr = 0.0;
  OptimizerState st = make_optimizer_state(p, cfg);
  backward(sum(square(p.at("w"))));
  optimizer_step(p, st);
  EXPECT_EQ(saec::testing::values(p.at("w")), before);
}

TEST(Ema, ExactElementwiseBlend) {
  ParamSet online = init_params({{"w", {5, 3}, 5, false}}, 1);
  ParamSet target = init_params({{"w", {5, 3}, 5, false}}, 2);
  auto prev = saec::testing::values(target.at("w"));
  const double tau = 0.005;
  ema_update(target, online, tau);
  for (std::size_t i = 0; i < prev.size(); ++i) {
    EXPECT_EQ(target.at("w")[i], tau * online.at("w")[i] + (1.0 - tau) * prev[i]);
  }
}

TEST(Ema, DriftBoundedByTau) {
  ParamSet online = init_params({{"w", {6, 6}, 6, false}}, 3);
  ParamSet target = init_params({{"w", {6, 6}, 6, false}}, 4);
  auto prev = saec::testing::values(target.at("w"));
  const double tau = 0.1;
  ema_update(target, online, tau);
  double drift = 0, gap = 0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    drift = std::max(drift, std::abs(target.at("w")[i] - prev[i]));
    gap = std::max(gap, std::abs(online.at("w")[i] - prev[i]));
  }
  EXPECT_LE(drift, tau * gap + 1e-15);
}

TEST(Ema, RejectsMismatchedSets) {
  ParamSet a = init_params({{"w", {2}, 2, false}}, 1);
  ParamSet b = init_params({{"v", {2}, 2, false}}, 1);
  EXPECT_THROW(ema_update(a, b, 0.5), std::invalid_argument);
}
