#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "saec/nn.hpp"
#include "saec/ops.hpp"
#include "saec/tensor.hpp"

namespace saec {

/// Network geometry shared by the actor, executor, critics and
/// discriminator.
struct AgentConfig {
  std::size_t channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t levels = 3;
  std::vector<std::size_t> widths{16, 32, 64};
  std::size_t z_dim = 16;
  std::size_t critic_hidden = 64;
  bool skips = true;
  Activation activation = Activation::leaky_relu;

  Shape image_shape(std::size_t batch) const { return {batch, channels, height, width}; }
  std::size_t bottleneck_h() const { return height >> levels; }
  std::size_t bottleneck_w() const { return width >> levels; }
  /// Throws std::invalid_argument on inconsistent geometry.
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct ActorOutput {
  Tensor mean;     // [N, z_dim]
  Tensor log_std;  // [N, z_dim], clamped to [kLogStdMin, kLogStdMax]
  std::vector<Tensor> skips;  // pre-pool features, highest resolution first
};

struct LatentAction {
  Tensor z;         // [N, z_dim], strictly inside (-1, 1)
  Tensor log_prob;  // [N]
};

ArchitectureSpec actor_spec(const AgentConfig& cfg);
ArchitectureSpec executor_spec(const AgentConfig& cfg);
ArchitectureSpec critic_spec(const AgentConfig& cfg);
ArchitectureSpec discriminator_spec(const AgentConfig& cfg);

ActorOutput actor_forward(const ParamSet& actor, const AgentConfig& cfg, const Tensor& x);

/// Reparameterized tanh-squashed Gaussian sample: u = mean + exp(log_std) * noise,
/// z = tanh(u), log_prob = sum_i [log N(u_i) - log(1 - z_i^2 + 1e-6)].
LatentAction sample_latent(const ActorOutput& out, const Tensor& noise);
LatentAction sample_latent(const ActorOutput& out, std::mt19937_64& rng);
/// z = tanh(mean); used for evaluation rollouts.
Tensor deterministic_latent(const ActorOutput& out);

/// Tanh-squashed Gaussian log density at z for a single coordinate.
double squashed_log_density(double z, double mean, double log_std);

Tensor executor_forward(const ParamSet& executor, const AgentConfig& cfg, const Tensor& x,
                        const Tensor& z, const std::vector<Tensor>& skips);
/// Q(x, z) -> [N]
Tensor critic_forward(const ParamSet& critic, const AgentConfig& cfg, const Tensor& x, const Tensor& z);
/// Pre-sigmoid logits -> [N]
Tensor discriminator_forward(const ParamSet& disc, const AgentConfig& cfg, const Tensor& image);

/// Every parameter set of the method. Targets start as copies of the online
/// critics.
struct Agent {
  AgentConfig config;
  ParamSet actor;
  ParamSet executor;
  ParamSet critic1;
  ParamSet critic2;
  ParamSet target1;
  ParamSet target2;
  ParamSet discriminator;

  static Agent create(const AgentConfig& config, std::uint64_t seed);
};

}  // namespace saec
