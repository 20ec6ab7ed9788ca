#include <gtest/gtest.h>

#include <cmath>

#include "gradient_cases.hpp"
#include "saec/losses.hpp"

using namespace saec;
using namespace saec::testing;

namespace {

bool all_zero_or_absent(const ParamSet& p) {
  for (const auto& [_, t] : p) {
    for (double g : t.grad()) {
      if (g != 0.0) return false;
    }
  }
  return true;
}

bool any_nonzero(const ParamSet& p) { return !all_zero_or_absent(p); }

struct Fixture {
  AgentConfig cfg = tiny_agent_config();
  Agent agent = Agent::create(cfg, 11);
  TransitionBatch batch = tiny_batch(cfg, 4, 12);
  Tensor noise = gaussian_noise({4, cfg.z_dim}, 13);
};

}  // namespace

TEST(Reconstruction, ConstantImagesOracle) {
  EXPECT_NEAR(l1_loss(Tensor::full({2, 1, 4, 4}, 0.2), Tensor::full({2, 1, 4, 4}, 0.5)).item(), 0.3, 1e-15);
}

TEST(Reconstruction, ZeroWhenCompositionHitsTarget) {
  Fixture f;
  DlTerms first = dl_loss(f.batch, f.agent, f.noise, 10.0, 1.0);
  f.batch.y = first.composed.detach();
  DlTerms again = dl_loss(f.batch, f.agent, f.noise, 10.0, 1.0);
  EXPECT_EQ(again.rec.item(), 0.0);
}

TEST(Reconstruction, WeightsCombine) {
  Fixture f;
  DlTerms both = dl_loss(f.batch, f.agent, f.noise, 10.0, 1.0);
  EXPECT_NEAR(both.total.item(), 10.0 * both.rec.item() + both.adv.item(), 1e-12);
  DlTerms rec_only = dl_loss(f.batch, f.agent, f.noise, 10.0, 0.0);
  EXPECT_EQ(rec_only.total.item(), 10.0 * rec_only.rec.item());
  EXPECT_FALSE(rec_only.adv.requires_grad());
}

TEST(Reconstruction, GradientsReachActorAndExecutorNotDiscriminator) {
  Fixture f;
  backward(dl_loss(f.batch, f.agent, f.noise, 10.0, 1.0).total);
  EXPECT_TRUE(any_nonzero(f.agent.executor));
  EXPECT_TRUE(any_nonzero(f.agent.actor));
  EXPECT_TRUE(all_zero_or_absent(f.agent.discriminator));
  EXPECT_TRUE(all_zero_or_absent(f.agent.critic1));
}

TEST(Discriminator, UninformativePoint) {
  Fixture f;
  for (auto& [_, t] : f.agent.discriminator) {
    for (auto& v : t.mutable_data()) v = 0.0;
  }
  Tensor loss = discriminator_loss(f.agent.discriminator, f.cfg, f.batch.y, f.batch.x);
  EXPECT_NEAR(loss.item(), 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(loss.item(), 1.3863, 5e-5);
}

TEST(Discriminator, PerfectDiscriminationApproachesZero) {
  // Real logits +40, fake logits -40 through the same stable path.
  Tensor real = Tensor::full({4}, 40.0), fake = Tensor::full({4}, -40.0);
  const double loss = (mean(softplus(neg(real))) + mean(softplus(fake))).item();
  EXPECT_GT(loss, 0.0);
  EXPECT_LT(loss, 1e-16);
}

TEST(Discriminator, GeneratorReceivesNoGradient) {
  Fixture f;
  DlTerms dl = dl_loss(f.batch, f.agent, f.noise, 10.0, 1.0);
  backward(discriminator_loss(f.agent.discriminator, f.cfg, f.batch.y, dl.composed));
  EXPECT_TRUE(all_zero_or_absent(f.agent.actor));
  EXPECT_TRUE(all_zero_or_absent(f.agent.executor));
  EXPECT_TRUE(any_nonzero(f.agent.discriminator));
}

TEST(Critic, ScalarResidualOracle) {
  Tensor q = Tensor::from({1}, {1.0}), target = Tensor::from({1}, {0.0});
  EXPECT_DOUBLE_EQ((0.5 * mean(square(q - target))).item(), 0.5);
}

TEST(Critic, DiscountZeroTargetIsReward) {
  Fixture f;
  CriticTerms t = critic_loss(f.batch, f.agent, 0.7, 0.0, f.noise);
  EXPECT_EQ(values(t.target), values(f.batch.reward));
}

TEST(Critic, TerminalTransitionsDoNotBootstrap) {
  Fixture f;
  CriticTerms t = critic_loss(f.batch, f.agent, 0.7, 0.99, f.noise);
  EXPECT_EQ(t.target[3], f.batch.reward[3]);  // done
  EXPECT_NE(t.target[0], f.batch.reward[0]);
}

TEST(Critic, TargetUsesTwinMinimumAndEntropy) {
  Fixture f;
  const double alpha = 0.7, gamma = 0.9;
  CriticTerms t = critic_loss(f.batch, f.agent, alpha, gamma, f.noise);
  ActorOutput next = actor_forward(f.agent.actor, f.cfg, f.batch.x_next);
  LatentAction a = sample_latent(next, f.noise);
  Tensor q1 = critic_forward(f.agent.target1, f.cfg, f.batch.x_next, a.z);
  Tensor q2 = critic_forward(f.agent.target2, f.cfg, f.batch.x_next, a.z);
  for (std::size_t i = 0; i < 4; ++i) {
    const double v = std::min(q1[i], q2[i]) - alpha * a.log_prob[i];
    const double expected = f.batch.reward[i] + gamma * (1.0 - f.batch.done[i]) * v;
    EXPECT_NEAR(t.target[i], expected, 1e-12);
  }
}

TEST(Critic, ZeroResidualWhenQMatchesTarget) {
  Fixture f;
  // Constant critics equal to a gamma=0 target of constant reward.
  f.batch.reward = Tensor::full({4}, 0.75);
  for (auto* c : {&f.agent.critic1, &f.agent.critic2}) {
    for (auto& v : c->at("q.w").mutable_data()) v = 0.0;
    c->at("q.b").mutable_data()[0] = 0.75;
  }
  CriticTerms t = critic_loss(f.batch, f.agent, 0.7, 0.0, f.noise);
  EXPECT_EQ(t.j_q1.item(), 0.0);
  EXPECT_EQ(t.j_q2.item(), 0.0);
}

TEST(Critic, TouchesOnlyCriticParameters) {
  Fixture f;
  CriticTerms t = critic_loss(f.batch, f.agent, 0.7, 0.99, f.noise);
  backward(t.j_q1 + t.j_q2);
  EXPECT_TRUE(any_nonzero(f.agent.critic1));
  EXPECT_TRUE(any_nonzero(f.agent.critic2));
  EXPECT_TRUE(all_zero_or_absent(f.agent.actor));
  EXPECT_TRUE(all_zero_or_absent(f.agent.executor));
  EXPECT_TRUE(all_zero_or_absent(f.agent.target1));
  EXPECT_TRUE(all_zero_or_absent(f.agent.target2));
}

TEST(Actor, TouchesOnlyActorParameters) {
  Fixture f;
  backward(actor_loss(f.batch, f.agent, 0.7, f.noise).j_pi);
  EXPECT_TRUE(any_nonzero(f.agent.actor));
  EXPECT_TRUE(all_zero_or_absent(f.agent.critic1));
  EXPECT_TRUE(all_zero_or_absent(f.agent.critic2));
  EXPECT_TRUE(all_zero_or_absent(f.agent.executor));
}

TEST(Actor, ConstantCriticAndZeroAlphaGiveNoGradient) {
  Fixture f;
  for (auto* c : {&f.agent.critic1, &f.agent.critic2}) {
    for (auto& v : c->at("q.w").mutable_data()) v = 0.0;
  }
  backward(actor_loss(f.batch, f.agent, 0.0, f.noise).j_pi);
  EXPECT_TRUE(all_zero_or_absent(f.agent.actor));
}

TEST(Actor, ObjectiveMatchesDefinition) {
  Fixture f;
  const double alpha = 0.4;
  ActorTerms t = actor_loss(f.batch, f.agent, alpha, f.noise);
  LatentAction a = sample_latent(actor_forward(f.agent.actor, f.cfg, f.batch.x), f.noise);
  Tensor q = minimum(critic_forward(f.agent.critic1, f.cfg, f.batch.x, a.z),
                     critic_forward(f.agent.critic2, f.cfg, f.batch.x, a.z));
  double expected = 0;
  for (std::size_t i = 0; i < 4; ++i) expected += alpha * a.log_prob[i] - q[i];
  EXPECT_NEAR(t.j_pi.item(), expected / 4.0, 1e-12);
  EXPECT_FALSE(t.log_prob.requires_grad());
}

TEST(Temperature, TargetEntropyIsNegativeLatentDimension) {
  Temperature t = Temperature::create(16);
  EXPECT_EQ(t.target_entropy, -16.0);
  EXPECT_EQ(t.alpha(), 1.0);
  EXPECT_TRUE(t.log_alpha.requires_grad());
}

TEST(Temperature, FixedPointAtTargetEntropy) {
  Temperature t = Temperature::create(16, 0.3);
  Tensor logp = Tensor::full({5}, 16.0);
  Tensor j = alpha_loss(logp, t);
  EXPECT_EQ(j.item(), 0.0);
  backward(j);
  EXPECT_EQ(t.log_alpha.grad()[0], 0.0);
}

TEST(Temperature, HighEntropyPushesAlphaDown) {
  Temperature t = Temperature::create(16, 0.0);
  Tensor logp = Tensor::full({5}, -3.0, true);
  backward(alpha_loss(logp, t));
  EXPECT_GT(t.log_alpha.grad()[0], 0.0);  // descent lowers log_alpha
  EXPECT_FALSE(logp.has_grad());
}

TEST(Temperature, AlphaStaysPositive) {
  for (double la : {-700.0, -50.0, 0.0, 30.0}) EXPECT_GT(Temperature::create(4, la).alpha(), 0.0);
}
