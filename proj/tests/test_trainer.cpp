#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gradient_cases.hpp"
#include "saec/trainer.hpp"

using namespace saec;
using namespace saec::testing;

namespace {

RunConfig tiny_run() {
  RunConfig c;
  c.agent = tiny_agent_config();
  c.horizon = 2;
  c.batch = 4;
  c.min_buffer = 4;
  c.buffer_capacity = 64;
  c.gradient_steps = 2;
  c.eval_samples = 4;
  c.seed = 5;
  return c;
}

using Snapshot = std::map<std::string, std::vector<double>>;

Snapshot snapshot(const Trainer& t) {
  Snapshot s;
  auto take = [&](const char* group, const ParamSet& p) {
    for (const auto& [name, tensor] : p) s[std::string(group) + "/" + name] = values(tensor);
  };
  take("actor", t.agent.actor);
  take("executor", t.agent.executor);
  take("critic1", t.agent.critic1);
  take("critic2", t.agent.critic2);
  take("target1", t.agent.target1);
  take("target2", t.agent.target2);
  take("discriminator", t.agent.discriminator);
  s["log_alpha"] = values(t.temperature.log_alpha);
  return s;
}

bool same_report(const IterationReport& a, const IterationReport& b) {
  const LossReport &x = a.losses, &y = b.losses;
  return a.iteration == b.iteration && a.reward_mean == b.reward_mean && a.psnr == b.psnr && a.ssim == b.ssim &&
         a.gradient_steps == b.gradient_steps && x.l_rec == y.l_rec && x.l_adv == y.l_adv && x.l_dl == y.l_dl &&
         x.l_disc == y.l_disc && x.j_q1 == y.j_q1 && x.j_q2 == y.j_q2 && x.j_pi == y.j_pi &&
         x.j_alpha == y.j_alpha && x.alpha_value == y.alpha_value && x.mean_q == y.mean_q &&
         x.mean_logprob == y.mean_logprob;
}

}  // namespace

TEST(Trainer, ZeroLearningRatesAreAFixedPoint) {
  RunConfig c = tiny_run();
  c.lr_dl = c.lr_q = c.lr_pi = c.lr_alpha = c.lr_disc = 0.0;
  c.tau = 0.0;
  Trainer t(c, make_data_source(c));
  const Snapshot before = snapshot(t);
  std::size_t steps = 0;
  for (int i = 0; i < 4; ++i) steps += t.train_iteration().gradient_steps;
  EXPECT_GT(steps, 0u);
  EXPECT_EQ(snapshot(t), before);
}

TEST(Trainer, ZeroLearningRatesKeepTargetsWithinRounding) {
  RunConfig c = tiny_run();
  c.lr_dl = c.lr_q = c.lr_pi = c.lr_alpha = c.lr_disc = 0.0;
  Trainer t(c, make_data_source(c));
  const Snapshot before = snapshot(t);
  for (int i = 0; i < 4; ++i) t.train_iteration();
  const Snapshot after = snapshot(t);
  for (const auto& [name, v] : before) {
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(after.at(name)[k], v[k], 1e-15) << name;
  }
}

TEST(Trainer, WarmUpSkipsUpdates) {
  RunConfig c = tiny_run();
  c.min_buffer = 7;
  Trainer t(c, make_data_source(c));
  const Snapshot before = snapshot(t);
  for (int i = 0; i < 3; ++i) {
    IterationReport r = t.train_iteration();
    EXPECT_EQ(r.gradient_steps, 0u);
    EXPECT_EQ(t.replay.size(), 2u * (i + 1));
  }
  EXPECT_EQ(snapshot(t), before);
  EXPECT_EQ(t.train_iteration().gradient_steps, c.gradient_steps);
  EXPECT_NE(snapshot(t), before);
}

TEST(Trainer, TransitionsCarryScaledRewardsAndTerminalFlag) {
  RunConfig c = tiny_run();
  c.min_buffer = 64;
  c.reward_scale = 0.25;
  Trainer t(c, make_data_source(c));
  IterationReport r = t.train_iteration();
  ASSERT_EQ(t.replay.size(), 2u);
  EXPECT_FALSE(t.replay.at(0).done);
  EXPECT_TRUE(t.replay.at(1).done);
  EXPECT_NEAR(0.5 * (t.replay.at(0).reward + t.replay.at(1).reward), 0.25 * r.reward_mean, 1e-15);
  EXPECT_EQ(values(t.replay.at(0).x_next), values(t.replay.at(1).x));
}

TEST(Trainer, IdenticalSeedsGiveIdenticalRuns) {
  RunConfig c = tiny_run();
  Trainer a(c, make_data_source(c)), b(c, make_data_source(c));
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(same_report(a.train_iteration(), b.train_iteration())) << i;
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Trainer, DifferentSeedsDiverge) {
  RunConfig c = tiny_run();
  RunConfig d = c;
  d.seed = 6;
  Trainer a(c, make_data_source(c)), b(d, make_data_source(d));
  EXPECT_NE(a.train_iteration().psnr, b.train_iteration().psnr);
}

TEST(Trainer, TargetsFollowExponentialAverage) {
  RunConfig c = tiny_run();
  c.tau = 0.25;
  Trainer t(c, make_data_source(c));
  for (int i = 0; i < 2; ++i) t.train_iteration();
  const Snapshot before = snapshot(t);
  TransitionBatch batch = stack_transitions(t.replay.sample(4, 99));
  t.gradient_step(batch, 7);
  const Snapshot after = snapshot(t);
  for (const auto& [name, tensor] : t.agent.target1) {
    const auto& old_t = before.at("target1/" + name);
    const auto& online = after.at("critic1/" + name);
    for (std::size_t k = 0; k < old_t.size(); ++k) {
      EXPECT_EQ(tensor[k], 0.25 * online[k] + 0.75 * old_t[k]) << name;
    }
  }
}

TEST(Trainer, PureReconstructionLeavesDiscriminatorAlone) {
  RunConfig c = tiny_run();
  c.lambda_adv = 0.0;
  Trainer t(c, make_data_source(c));
  const Snapshot before = snapshot(t);
  for (int i = 0; i < 3; ++i) t.train_iteration();
  const Snapshot after = snapshot(t);
  for (const auto& [name, _] : t.agent.discriminator) {
    EXPECT_EQ(after.at("discriminator/" + name), before.at("discriminator/" + name));
  }
  EXPECT_NE(after.at("log_alpha"), before.at("log_alpha"));
}

TEST(Trainer, NonFiniteLossRaises) {
  RunConfig c = tiny_run();
  Trainer t(c, make_data_source(c));
  for (int i = 0; i < 2; ++i) t.train_iteration();
  TransitionBatch batch = stack_transitions(t.replay.sample(4, 1));
  batch.reward.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(t.gradient_step(batch, 3), NumericError);
}

TEST(Trainer, AlphaStaysPositiveDuringTraining) {
  RunConfig c = tiny_run();
  c.lr_alpha = 0.5;
  Trainer t(c, make_data_source(c));
  for (int i = 0; i < 6; ++i) {
    IterationReport r = t.train_iteration();
    if (r.gradient_steps) {
      EXPECT_GT(r.losses.alpha_value, 0.0);
    }
  }
}

TEST(Trainer, InvalidConfigRejectedBeforeConstruction) {
  RunConfig c = tiny_run();
  c.gamma = 2.0;
  EXPECT_THROW(Trainer(c, make_data_source(tiny_run())), ConfigError);
}

TEST(Episode, DeterministicRolloutIsRepeatable) {
  RunConfig c = tiny_run();
  Agent agent = Agent::create(c.agent, 3);
  DataSource src = make_data_source(c);
  Sample s = src.test_sample(0);
  Episode a = run_episode(agent, s, c.env(), std::nullopt);
  Episode b = run_episode(agent, s, c.env(), std::nullopt);
  ASSERT_EQ(a.states.size(), c.horizon + 1);
  for (std::size_t k = 0; k <= c.horizon; ++k) EXPECT_EQ(values(a.states[k]), values(b.states[k]));
  EXPECT_EQ(a.final_psnr, b.final_psnr);
  Episode noisy = run_episode(agent, s, c.env(), 17);
  EXPECT_NE(values(noisy.latents[0]), values(a.latents[0]));
}
