#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "saec/agent.hpp"
#include "saec/config.hpp"
#include "saec/env.hpp"
#include "saec/losses.hpp"
#include "saec/nn.hpp"
#include "saec/replay.hpp"

namespace saec {

/// One adaptive-moment state per parameter group. The actor has separate
/// states for its reconstruction and policy updates.
struct Optimizers {
  OptimizerState actor_dl;
  OptimizerState actor_pi;
  OptimizerState executor;
  OptimizerState critic1;
  OptimizerState critic2;
  OptimizerState discriminator;
  OptimizerState alpha;

  static Optimizers create(const Agent& agent, const RunConfig& cfg);
};

/// States x_0..x_T of one rollout with the actions that produced them.
struct Episode {
  Tensor target;
  std::vector<Tensor> states;   // T+1 entries, [C,H,W]
  std::vector<Tensor> actions;  // T entries, [C,H,W]
  std::vector<Tensor> latents;  // T entries, [z_dim]
  std::vector<double> rewards;  // raw env rewards
  double final_psnr = 0.0;
  double final_ssim = 0.0;
};

/// Rolls the agent through one episode. With a noise seed the latent is
/// sampled from the policy; without one the policy mean is used.
Episode run_episode(const Agent& agent, const Sample& sample, const EnvConfig& env,
                    std::optional<std::uint64_t> noise_seed);

struct IterationReport {
  std::uint64_t iteration = 0;
  double reward_mean = 0.0;
  double psnr = 0.0;  // final state
  double ssim = 0.0;
  std::size_t gradient_steps = 0;
  LossReport losses;  // mean over gradient steps; meaningful when gradient_steps > 0
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owns every piece of mutable training state. All randomness is derived
/// from the master seed and the iteration counter.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, DataSource source);

  /// Rollout of one episode, then gradient_steps updates once the replay
  /// buffer holds min_buffer transitions.
  IterationReport train_iteration();
  /// One full update on a given batch. Throws NumericError on a non-finite
  /// loss.
  LossReport gradient_step(const TransitionBatch& batch, std::uint64_t noise_seed);

  const RunConfig& config() const { return cfg_; }
  const DataSource& source() const { return source_; }
  std::uint64_t iteration() const { return iteration_; }
  void set_iteration(std::uint64_t it) { iteration_ = it; }

  Agent agent;
  Temperature temperature;
  ParamSet alpha_params;  // holds temperature.log_alpha
  Optimizers optimizers;
  ReplayBuffer replay;

 private:
  RunConfig cfg_;
  DataSource source_;
  std::uint64_t iteration_ = 0;
};

DataSource make_data_source(const RunConfig& cfg);

}  // namespace saec
