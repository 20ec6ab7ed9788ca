#include "saec/trainer.hpp"

#include <cmath>
#include <string>

#include "saec/metrics.hpp"
#include "saec/random.hpp"

namespace saec {

namespace {

// Seed stream ids.
enum : std::uint64_t {
  kEpisodeSample = 10,
  kEpisodeNoise = 11,
  kBatchIndices = 20,
  kBatchNoise = 21,
};

OptimizerConfig with_lr(const RunConfig& cfg, double lr) {
  OptimizerConfig c;
  c.kind = cfg.optimizer;
  c.lr = lr;
  return c;
}

Tensor unbatch(const Tensor& t) {
  Shape s(t.shape().begin() + 1, t.shape().end());
  return reshape(t, std::move(s));
}

Tensor batch_one(const Tensor& t) {
  Shape s{1};
  s.insert(s.end(), t.shape().begin(), t.shape().end());
  return reshape(t, std::move(s));
}

void require_finite(const Tensor& loss, const char* name, std::uint64_t iteration) {
  if (!std::isfinite(loss.item())) {
    throw NumericError(std::string("non-finite ") + name + " (" + std::to_string(loss.item()) +
                       ") at iteration " + std::to_string(iteration));
  }
}

}  // namespace

Optimizers Optimizers::create(const Agent& agent, const RunConfig& cfg) {
  Optimizers o;
  o.actor_dl = make_optimizer_state(agent.actor, with_lr(cfg, cfg.lr_dl));
  o.actor_pi = make_optimizer_state(agent.actor, with_lr(cfg, cfg.lr_pi));
  o.executor = make_optimizer_state(agent.executor, with_lr(cfg, cfg.lr_dl));
  o.critic1 = make_optimizer_state(agent.critic1, with_lr(cfg, cfg.lr_q));
  o.critic2 = make_optimizer_state(agent.critic2, with_lr(cfg, cfg.lr_q));
  o.discriminator = make_optimizer_state(agent.discriminator, with_lr(cfg, cfg.lr_disc));
  ParamSet alpha;
  alpha.add("log_alpha", Tensor::scalar(0.0, true));
  o.alpha = make_optimizer_state(alpha, with_lr(cfg, cfg.lr_alpha));
  return o;
}

Episode run_episode(const Agent& agent, const Sample& sample, const EnvConfig& env,
                    std::optional<std::uint64_t> noise_seed) {
  NoGradGuard no_grad;
  const AgentConfig& cfg = agent.config;
  Episode ep;
  ep.target = sample.image;
  EnvState state = env_reset(sample, env).state;
  ep.states.push_back(state.current);
  for (std::size_t t = 0; t < env.horizon; ++t) {
    Tensor x = batch_one(state.current);
    ActorOutput out = actor_forward(agent.actor, cfg, x);
    Tensor z = noise_seed ? sample_latent(out, gaussian_noise(out.mean.shape(), derive_seed(*noise_seed, {t}))).z
                          : deterministic_latent(out);
    Tensor y_tilde = unbatch(executor_forward(agent.executor, cfg, x, z, out.skips));
    StepResult r = env_step(state, y_tilde, env);
    ep.actions.push_back(y_tilde);
    ep.latents.push_back(unbatch(z));
    ep.rewards.push_back(r.reward);
    state = r.next;
    ep.states.push_back(state.current);
  }
  ep.final_psnr = psnr(state.current, state.target);
  ep.final_ssim = ssim(state.current, state.target);
  return ep;
}

DataSource make_data_source(const RunConfig& cfg) {
  const AgentConfig& a = cfg.agent;
  switch (cfg.dataset) {
    case DatasetKind::stripes:
      return DataSource::synthetic(SyntheticKind::stripes, a.channels, a.height, a.width, cfg.eval_samples, cfg.seed);
    case DatasetKind::blobs:
      return DataSource::synthetic(SyntheticKind::blobs, a.channels, a.height, a.width, cfg.eval_samples, cfg.seed);
    case DatasetKind::gradients:
      return DataSource::synthetic(SyntheticKind::gradients, a.channels, a.height, a.width, cfg.eval_samples,
                                   cfg.seed);
    case DatasetKind::directory:
      return load_image_directory(cfg.data_dir, a.channels, a.height, a.width, cfg.resize, cfg.split_fraction,
                                  cfg.seed);
  }
  throw ConfigError(0, "unknown dataset");
}

Trainer::Trainer(const RunConfig& cfg, DataSource source)
    : agent(Agent::create((validate_config(cfg), cfg.agent), cfg.seed)),
      temperature(Temperature::create(cfg.agent.z_dim, cfg.initial_log_alpha)),
      optimizers(Optimizers::create(agent, cfg)),
      replay(cfg.buffer_capacity),
      cfg_(cfg),
      source_(std::move(source)) {
  alpha_params.add("log_alpha", temperature.log_alpha);
}

IterationReport Trainer::train_iteration() {
  const std::uint64_t it = iteration_;
  const EnvConfig env = cfg_.env();
  IterationReport report;
  report.iteration = it;

  const Sample sample = source_.draw(derive_seed(cfg_.seed, {kEpisodeSample, it}));
  Episode ep = run_episode(agent, sample, env, derive_seed(cfg_.seed, {kEpisodeNoise, it}));
  double reward_sum = 0.0;
  for (std::size_t t = 0; t < env.horizon; ++t) {
    reward_sum += ep.rewards[t];
    Transition tr;
    tr.y = ep.target;
    tr.x = ep.states[t];
    tr.z = ep.latents[t];
    tr.reward = cfg_.reward_scale * ep.rewards[t];
    tr.x_next = ep.states[t + 1];
    tr.done = t + 1 == env.horizon;
    tr.mask = sample.mask;
    replay.push(std::move(tr));
  }
  report.reward_mean = reward_sum / static_cast<double>(env.horizon);
  report.psnr = ep.final_psnr;
  report.ssim = ep.final_ssim;

  if (replay.size() >= cfg_.min_buffer && replay.size() > 0) {
    LossReport sum;
    for (std::size_t g = 0; g < cfg_.gradient_steps; ++g) {
      TransitionBatch batch = stack_transitions(replay.sample(cfg_.batch, derive_seed(cfg_.seed, {kBatchIndices, it, g})));
      LossReport r = gradient_step(batch, derive_seed(cfg_.seed, {kBatchNoise, it, g}));
      sum.l_rec += r.l_rec;
      sum.l_adv += r.l_adv;
      sum.l_dl += r.l_dl;
      sum.l_disc += r.l_disc;
      sum.j_q1 += r.j_q1;
      sum.j_q2 += r.j_q2;
      sum.j_pi += r.j_pi;
      sum.j_alpha += r.j_alpha;
      sum.alpha_value += r.alpha_value;
      sum.mean_q += r.mean_q;
      sum.mean_logprob += r.mean_logprob;
      ++report.gradient_steps;
    }
    if (report.gradient_steps > 0) {
      const double n = static_cast<double>(report.gradient_steps);
      for (double* v : {&sum.l_rec, &sum.l_adv, &sum.l_dl, &sum.l_disc, &sum.j_q1, &sum.j_q2, &sum.j_pi,
                        &sum.j_alpha, &sum.alpha_value, &sum.mean_q, &sum.mean_logprob}) {
        *v /= n;
      }
      report.losses = sum;
    }
  }
  ++iteration_;
  return report;
}

LossReport Trainer::gradient_step(const TransitionBatch& batch, std::uint64_t noise_seed) {
  const Shape latent{batch.size(), cfg_.agent.z_dim};
  LossReport r;

  // Reconstruction and adversarial update of actor and executor.
  agent.actor.ensure_grads();
  agent.executor.ensure_grads();
  agent.actor.zero_grad();
  agent.executor.zero_grad();
  DlTerms dl = dl_loss(batch, agent, gaussian_noise(latent, derive_seed(noise_seed, {0})), cfg_.lambda_rec,
                       cfg_.lambda_adv);
  require_finite(dl.total, "reconstruction loss", iteration_);
  backward(dl.total);
  optimizer_step(agent.actor, optimizers.actor_dl);
  optimizer_step(agent.executor, optimizers.executor);
  r.l_rec = dl.rec.item();
  r.l_adv = dl.adv.item();
  r.l_dl = dl.total.item();

  if (cfg_.lambda_adv != 0.0) {
    agent.discriminator.ensure_grads();
    agent.discriminator.zero_grad();
    Tensor d = discriminator_loss(agent.discriminator, agent.config, batch.y, dl.composed);
    require_finite(d, "discriminator loss", iteration_);
    backward(d);
    optimizer_step(agent.discriminator, optimizers.discriminator);
    r.l_disc = d.item();
  }

  // Twin critics.
  const double alpha = temperature.alpha();
  agent.critic1.ensure_grads();
  agent.critic2.ensure_grads();
  agent.critic1.zero_grad();
  agent.critic2.zero_grad();
  CriticTerms q = critic_loss(batch, agent, alpha, cfg_.gamma, gaussian_noise(latent, derive_seed(noise_seed, {1})));
  require_finite(q.j_q1, "critic 1 loss", iteration_);
  require_finite(q.j_q2, "critic 2 loss", iteration_);
  backward(q.j_q1);
  backward(q.j_q2);
  optimizer_step(agent.critic1, optimizers.critic1);
  optimizer_step(agent.critic2, optimizers.critic2);
  r.j_q1 = q.j_q1.item();
  r.j_q2 = q.j_q2.item();
  r.mean_q = q.mean_q;

  // Policy.
  agent.actor.zero_grad();
  ActorTerms pi = actor_loss(batch, agent, alpha, gaussian_noise(latent, derive_seed(noise_seed, {2})));
  require_finite(pi.j_pi, "policy loss", iteration_);
  backward(pi.j_pi);
  optimizer_step(agent.actor, optimizers.actor_pi);
  r.j_pi = pi.j_pi.item();
  r.mean_logprob = mean(pi.log_prob).item();

  // Temperature.
  alpha_params.ensure_grads();
  alpha_params.zero_grad();
  Tensor ja = alpha_loss(pi.log_prob, temperature);
  require_finite(ja, "temperature loss", iteration_);
  backward(ja);
  optimizer_step(alpha_params, optimizers.alpha);
  r.j_alpha = ja.item();
  r.alpha_value = temperature.alpha();

  ema_update(agent.target1, agent.critic1, cfg_.tau);
  ema_update(agent.target2, agent.critic2, cfg_.tau);
  return r;
}

}  // namespace saec
