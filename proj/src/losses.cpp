#include "saec/losses.hpp"

#include <cmath>
#include <random>

#include "saec/env.hpp"

namespace saec {

Temperature Temperature::create(std::size_t z_dim, double initial_log_alpha) {
  return {Tensor::scalar(initial_log_alpha, true), -static_cast<double>(z_dim)};
}

double Temperature::alpha() const { return std::exp(log_alpha.item()); }

bool LossReport::finite() const {
  for (double v : {l_rec, l_adv, l_dl, l_disc, j_q1, j_q2, j_pi, j_alpha, alpha_value, mean_q, mean_logprob}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor gaussian_noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = normal(rng);
  return Tensor::from(shape, std::move(v));
}

Tensor l1_loss(const Tensor& a, const Tensor& b) { return mean(abs(a - b)); }

DlTerms dl_loss(const TransitionBatch& batch, const Agent& agent, const Tensor& noise,
                double lambda_rec, double lambda_adv) {
  const AgentConfig& cfg = agent.config;
  ActorOutput out = actor_forward(agent.actor, cfg, batch.x);
  LatentAction a = sample_latent(out, noise);
  Tensor y_tilde = executor_forward(agent.executor, cfg, batch.x, a.z, out.skips);

  DlTerms t;
  t.composed = compose_state(batch.x, y_tilde, batch.mask);
  t.rec = l1_loss(t.composed, batch.y);
  if (lambda_adv != 0.0) {
    ParamSet frozen = agent.discriminator.detached();
    t.adv = mean(softplus(neg(discriminator_forward(frozen, cfg, t.composed))));
  } else {
    NoGradGuard no_grad;
    t.adv = mean(softplus(neg(discriminator_forward(agent.discriminator, cfg, t.composed))));
  }
  t.total = lambda_adv != 0.0 ? lambda_rec * t.rec + lambda_adv * t.adv : lambda_rec * t.rec;
  return t;
}

Tensor discriminator_loss(const ParamSet& disc, const AgentConfig& cfg, const Tensor& real,
                          const Tensor& fake) {
  Tensor real_term = mean(softplus(neg(discriminator_forward(disc, cfg, real))));
  Tensor fake_term = mean(softplus(discriminator_forward(disc, cfg, fake.detach())));
  return real_term + fake_term;
}

CriticTerms critic_loss(const TransitionBatch& batch, const Agent& agent, double alpha, double gamma,
                        const Tensor& next_noise) {
  const AgentConfig& cfg = agent.config;
  CriticTerms t;
  {
    NoGradGuard no_grad;
    ActorOutput next = actor_forward(agent.actor, cfg, batch.x_next);
    LatentAction a = sample_latent(next, next_noise);
    Tensor q_next = minimum(critic_forward(agent.target1, cfg, batch.x_next, a.z),
                            critic_forward(agent.target2, cfg, batch.x_next, a.z));
    Tensor soft_value = q_next - alpha * a.log_prob;
    t.target = batch.reward + gamma * ((1.0 - batch.done) * soft_value);
  }
  Tensor q1 = critic_forward(agent.critic1, cfg, batch.x, batch.z);
  Tensor q2 = critic_forward(agent.critic2, cfg, batch.x, batch.z);
  t.j_q1 = 0.5 * mean(square(q1 - t.target));
  t.j_q2 = 0.5 * mean(square(q2 - t.target));
  double s = 0.0;
  for (double v : q1.data()) s += v;
  for (double v : q2.data()) s += v;
  t.mean_q = s / static_cast<double>(q1.numel() + q2.numel());
  return t;
}

ActorTerms actor_loss(const TransitionBatch& batch, const Agent& agent, double alpha, const Tensor& noise) {
  const AgentConfig& cfg = agent.config;
  ActorOutput out = actor_forward(agent.actor, cfg, batch.x);
  LatentAction a = sample_latent(out, noise);
  ParamSet c1 = agent.critic1.detached();
  ParamSet c2 = agent.critic2.detached();
  Tensor q = minimum(critic_forward(c1, cfg, batch.x, a.z), critic_forward(c2, cfg, batch.x, a.z));
  return {mean(alpha * a.log_prob - q), a.log_prob.detach()};
}

Tensor alpha_loss(const Tensor& log_prob, const Temperature& temperature) {
  Tensor shifted = log_prob.detach() + temperature.target_entropy;
  return neg(mean(exp(temperature.log_alpha) * shifted));
}

}  // namespace saec
