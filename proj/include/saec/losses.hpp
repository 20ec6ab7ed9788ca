#pragma once

#include <cstddef>
#include <cstdint>

#include "saec/agent.hpp"
#include "saec/replay.hpp"
#include "saec/tensor.hpp"

namespace saec {

/// Entropy temperature alpha = exp(log_alpha).
struct Temperature {
  Tensor log_alpha;  // scalar, requires grad
  double target_entropy = 0.0;

  static Temperature create(std::size_t z_dim, double initial_log_alpha = 0.0);
  double alpha() const;
};

/// Diagnostics for one gradient step.
struct LossReport {
  double l_rec = 0.0;
  double l_adv = 0.0;
  double l_dl = 0.0;
  double l_disc = 0.0;
  double j_q1 = 0.0;
  double j_q2 = 0.0;
  double j_pi = 0.0;
  double j_alpha = 0.0;
  double alpha_value = 0.0;
  double mean_q = 0.0;
  double mean_logprob = 0.0;

  bool finite() const;
};

/// Standard normal tensor from a seeded stream.
Tensor gaussian_noise(const Shape& shape, std::uint64_t seed);

/// mean |a - b|
Tensor l1_loss(const Tensor& a, const Tensor& b);

struct DlTerms {
  Tensor total;      // lambda_rec * rec + lambda_adv * adv
  Tensor rec;
  Tensor adv;
  Tensor composed;   // one-step translation of the batch states
};

/// Reconstruction plus non-saturating adversarial loss for the actor and
/// executor. The discriminator is read through a frozen copy. noise has the
/// latent shape [B, z_dim].
DlTerms dl_loss(const TransitionBatch& batch, const Agent& agent, const Tensor& noise,
                double lambda_rec, double lambda_adv);

/// mean softplus(-D(real)) + mean softplus(D(fake)); fake is detached here.
Tensor discriminator_loss(const ParamSet& disc, const AgentConfig& cfg, const Tensor& real,
                          const Tensor& fake);

struct CriticTerms {
  Tensor j_q1;
  Tensor j_q2;
  Tensor target;  // constant bootstrap target [B]
  double mean_q = 0.0;
};

/// Soft Bellman residuals of both online critics against the twin-target
/// bootstrap r + gamma (1 - done) [min Qbar(x', z') - alpha log pi(z'|x')].
/// next_noise draws z' at x'.
CriticTerms critic_loss(const TransitionBatch& batch, const Agent& agent, double alpha, double gamma,
                        const Tensor& next_noise);

struct ActorTerms {
  Tensor j_pi;
  Tensor log_prob;  // [B], detached
};

/// mean(alpha log pi(z|x) - min(Q1, Q2)(x, z)) with frozen critics.
ActorTerms actor_loss(const TransitionBatch& batch, const Agent& agent, double alpha, const Tensor& noise);

/// mean(-exp(log_alpha) (log_prob + target_entropy)); log_prob is detached.
Tensor alpha_loss(const Tensor& log_prob, const Temperature& temperature);

}  // namespace saec
