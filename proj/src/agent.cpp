#include "saec/agent.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "saec/random.hpp"

namespace saec {

namespace {

std::string idx(const char* prefix, std::size_t l, const char* suffix) {
  return std::string(prefix) + std::to_string(l) + suffix;
}

// Strided k4/s2/p1 conv stack shared by the critic and the discriminator.
void add_encoder_spec(ArchitectureSpec& spec, const AgentConfig& cfg) {
  std::size_t in = cfg.channels;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::size_t out = cfg.widths[l];
    spec.push_back({idx("enc", l, ".w"), {out, in, 4, 4}, in * 16, false});
    spec.push_back({idx("enc", l, ".b"), {out}, 0, true});
    in = out;
  }
}

std::size_t encoder_features(const AgentConfig& cfg) {
  return cfg.widths.back() * cfg.bottleneck_h() * cfg.bottleneck_w();
}

Tensor encode(const ParamSet& p, const AgentConfig& cfg, const Tensor& image) {
  if (image.rank() != 4 || image.dim(1) != cfg.channels || image.dim(2) != cfg.height ||
      image.dim(3) != cfg.width) {
    throw ShapeError("expected image batch " + to_string(cfg.image_shape(image.rank() ? image.dim(0) : 1)) +
                     ", got " + to_string(image.shape()));
  }
  Tensor h = image;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    h = conv2d(h, p.at(idx("enc", l, ".w")), 2, 1);
    h = activation(cfg.activation, add_channel_bias(h, p.at(idx("enc", l, ".b"))));
  }
  return flatten(h);
}

}  // namespace

void AgentConfig::validate() const {
  if (channels == 0 || height == 0 || width == 0) throw std::invalid_argument("image shape must be positive");
  if (levels == 0) throw std::invalid_argument("levels must be at least 1");
  if (widths.size() != levels) {
    throw std::invalid_argument("widths lists " + std::to_string(widths.size()) + " entries for " +
                                std::to_string(levels) + " levels");
  }
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("channel widths must be positive");
  }
  const std::size_t div = std::size_t{1} << levels;
  if (height % div != 0 || width % div != 0) {
    throw std::invalid_argument("image " + std::to_string(height) + "x" + std::to_string(width) +
                                " not divisible by 2^levels = " + std::to_string(div));
  }
  if (z_dim == 0) throw std::invalid_argument("z_dim must be positive");
  if (critic_hidden == 0) throw std::invalid_argument("critic_hidden must be positive");
}

ArchitectureSpec actor_spec(const AgentConfig& cfg) {
  cfg.validate();
  ArchitectureSpec spec;
  std::size_t in = cfg.channels;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::size_t out = cfg.widths[l];
    spec.push_back({idx("down", l, ".w"), {out, in, 3, 3}, in * 9, false});
    spec.push_back({idx("down", l, ".b"), {out}, 0, true});
    in = out;
  }
  const std::size_t feat = encoder_features(cfg);
  spec.push_back({"mean.w", {feat, cfg.z_dim}, feat, false});
  spec.push_back({"mean.b", {cfg.z_dim}, 0, true});
  spec.push_back({"log_std.w", {feat, cfg.z_dim}, feat, false});
  spec.push_back({"log_std.b", {cfg.z_dim}, 0, true});
  return spec;
}

ArchitectureSpec executor_spec(const AgentConfig& cfg) {
  cfg.validate();
  ArchitectureSpec spec;
  const std::size_t feat = encoder_features(cfg);
  spec.push_back({"proj.w", {cfg.z_dim, feat}, cfg.z_dim, false});
  spec.push_back({"proj.b", {feat}, 0, true});
  std::size_t in = cfg.widths.back();
  for (std::size_t l = cfg.levels; l-- > 0;) {
    const std::size_t out = cfg.widths[l];
    spec.push_back({idx("up", l, ".w"), {in, out, 2, 2}, in * 4, false});
    spec.push_back({idx("up", l, ".b"), {out}, 0, true});
    in = cfg.skips ? 2 * out : out;
  }
  spec.push_back({"head.w", {cfg.channels, in, 3, 3}, in * 9, false});
  spec.push_back({"head.b", {cfg.channels}, 0, true});
  return spec;
}

ArchitectureSpec critic_spec(const AgentConfig& cfg) {
  cfg.validate();
  ArchitectureSpec spec;
  add_encoder_spec(spec, cfg);
  const std::size_t in = encoder_features(cfg) + cfg.z_dim;
  spec.push_back({"fc.w", {in, cfg.critic_hidden}, in, false});
  spec.push_back({"fc.b", {cfg.critic_hidden}, 0, true});
  spec.push_back({"q.w", {cfg.critic_hidden, 1}, cfg.critic_hidden, false});
  spec.push_back({"q.b", {1}, 0, true});
  return spec;
}

ArchitectureSpec discriminator_spec(const AgentConfig& cfg) {
  cfg.validate();
  ArchitectureSpec spec;
  add_encoder_spec(spec, cfg);
  const std::size_t feat = encoder_features(cfg);
  spec.push_back({"logit.w", {feat, 1}, feat, false});
  spec.push_back({"logit.b", {1}, 0, true});
  return spec;
}

ActorOutput actor_forward(const ParamSet& actor, const AgentConfig& cfg, const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != cfg.channels) {
    throw ShapeError("actor: expected [N," + std::to_string(cfg.channels) + ",H,W] state, got " +
                     to_string(x.shape()));
  }
  const std::size_t div = std::size_t{1} << cfg.levels;
  if (x.dim(2) % div != 0 || x.dim(3) % div != 0) {
    throw ShapeError("actor: spatial dims of " + to_string(x.shape()) + " not divisible by " +
                     std::to_string(div));
  }
  if (x.dim(2) != cfg.height || x.dim(3) != cfg.width) {
    throw ShapeError("actor: state " + to_string(x.shape()) + " does not match configured image size");
  }
  ActorOutput out;
  Tensor h = x;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    h = conv2d(h, actor.at(idx("down", l, ".w")), 1, 1);
    h = activation(cfg.activation, add_channel_bias(h, actor.at(idx("down", l, ".b"))));
    out.skips.push_back(h);
    h = max_pool2d(h);
  }
  Tensor f = flatten(h);
  out.mean = linear(f, actor.at("mean.w"), actor.at("mean.b"));
  out.log_std = clamp(linear(f, actor.at("log_std.w"), actor.at("log_std.b")), kLogStdMin, kLogStdMax);
  return out;
}

LatentAction sample_latent(const ActorOutput& out, const Tensor& noise) {
  if (noise.shape() != out.mean.shape()) {
    throw ShapeError("sample_latent: noise " + to_string(noise.shape()) + " vs mean " +
                     to_string(out.mean.shape()));
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor u = out.mean + exp(out.log_std) * noise;
  LatentAction a;
  a.z = tanh(u);
  // (u - mean) / sigma == noise, so the Gaussian term is -noise^2/2 - log_std - log(2 pi)/2.
  Tensor gaussian = shift(scale(square(noise), -0.5), -half_log_2pi) - out.log_std;
  Tensor jacobian = log(shift(neg(square(a.z)), 1.0 + 1e-6));
  a.log_prob = sum_axis(gaussian - jacobian, 1);
  return a;
}

LatentAction sample_latent(const ActorOutput& out, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(out.mean.numel());
  for (auto& e : eps) e = normal(rng);
  return sample_latent(out, Tensor::from(out.mean.shape(), std::move(eps)));
}

Tensor deterministic_latent(const ActorOutput& out) { return tanh(out.mean); }

double squashed_log_density(double z, double mean, double log_std) {
  const double u = std::atanh(z);
  const double sigma = std::exp(log_std);
  const double e = (u - mean) / sigma;
  return -0.5 * e * e - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(1.0 - z * z + 1e-6);
}

Tensor executor_forward(const ParamSet& executor, const AgentConfig& cfg, const Tensor& x,
                        const Tensor& z, const std::vector<Tensor>& skips) {
  if (z.rank() != 2 || z.dim(1) != cfg.z_dim) {
    throw ShapeError("executor: latent shape " + to_string(z.shape()) + ", expected [N," +
                     std::to_string(cfg.z_dim) + "]");
  }
  const std::size_t n = z.dim(0);
  if (x.rank() != 4 || x.dim(0) != n) {
    throw ShapeError("executor: state " + to_string(x.shape()) + " does not pair with latent " +
                     to_string(z.shape()));
  }
  if (cfg.skips && skips.size() != cfg.levels) {
    throw ShapeError("executor: expected " + std::to_string(cfg.levels) + " skips, got " +
                     std::to_string(skips.size()));
  }
  Tensor h = activation(cfg.activation, linear(z, executor.at("proj.w"), executor.at("proj.b")));
  h = reshape(h, {n, cfg.widths.back(), cfg.bottleneck_h(), cfg.bottleneck_w()});
  for (std::size_t l = cfg.levels; l-- > 0;) {
    h = conv2d_transpose(h, executor.at(idx("up", l, ".w")), 2, 0);
    h = activation(cfg.activation, add_channel_bias(h, executor.at(idx("up", l, ".b"))));
    if (cfg.skips) {
      const Shape expected{n, cfg.widths[l], cfg.height >> l, cfg.width >> l};
      if (skips[l].shape() != expected) {
        throw ShapeError("executor: skip " + std::to_string(l) + " has shape " + to_string(skips[l].shape()) +
                         ", expected " + to_string(expected));
      }
      h = concat({h, skips[l]}, 1);
    }
  }
  h = add_channel_bias(conv2d(h, executor.at("head.w"), 1, 1), executor.at("head.b"));
  return tanh(h);
}

Tensor critic_forward(const ParamSet& critic, const AgentConfig& cfg, const Tensor& x, const Tensor& z) {
  if (z.rank() != 2 || z.dim(1) != cfg.z_dim || (x.rank() > 0 && z.dim(0) != x.dim(0))) {
    throw ShapeError("critic: latent shape " + to_string(z.shape()) + " incompatible with state " +
                     to_string(x.shape()));
  }
  Tensor f = concat({encode(critic, cfg, x), z}, 1);
  Tensor h = activation(cfg.activation, linear(f, critic.at("fc.w"), critic.at("fc.b")));
  Tensor q = linear(h, critic.at("q.w"), critic.at("q.b"));
  return reshape(q, {x.dim(0)});
}

Tensor discriminator_forward(const ParamSet& disc, const AgentConfig& cfg, const Tensor& image) {
  Tensor f = encode(disc, cfg, image);
  Tensor logit = linear(f, disc.at("logit.w"), disc.at("logit.b"));
  return reshape(logit, {image.dim(0)});
}

Agent Agent::create(const AgentConfig& config, std::uint64_t seed) {
  config.validate();
  Agent a;
  a.config = config;
  a.actor = init_params(actor_spec(config), derive_seed(seed, {1}));
  a.executor = init_params(executor_spec(config), derive_seed(seed, {2}));
  a.critic1 = init_params(critic_spec(config), derive_seed(seed, {3}));
  a.critic2 = init_params(critic_spec(config), derive_seed(seed, {4}));
  a.discriminator = init_params(discriminator_spec(config), derive_seed(seed, {5}));
  a.target1 = a.critic1.clone();
  a.target2 = a.critic2.clone();
  return a;
}

}  // namespace saec
