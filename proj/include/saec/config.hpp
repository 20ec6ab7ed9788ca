#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "saec/agent.hpp"
#include "saec/env.hpp"
#include "saec/image_io.hpp"
#include "saec/nn.hpp"

namespace saec {

enum class DatasetKind { stripes, blobs, gradients, directory };

/// Every knob of a run. Defaults are the documented baseline.
struct RunConfig {
  AgentConfig agent;

  std::size_t horizon = 3;
  double gamma = 0.99;
  double tau = 0.005;
  double lr_dl = 3e-4;
  double lr_q = 3e-4;
  double lr_pi = 3e-4;
  double lr_alpha = 3e-4;
  double lr_disc = 3e-5;
  double lambda_rec = 10.0;
  double lambda_adv = 1.0;
  std::size_t batch = 32;
  std::size_t buffer_capacity = 10000;
  std::size_t min_buffer = 32;
  std::size_t gradient_steps = 2;
  OptimizerKind optimizer = OptimizerKind::adam;
  double initial_log_alpha = 0.0;

  RewardKind reward = RewardKind::psnr;
  RewardMode reward_mode = RewardMode::absolute;
  double reward_scale = 0.1;
  double fill_value = 0.0;

  DatasetKind dataset = DatasetKind::stripes;
  std::string data_dir;
  ResizeMode resize = ResizeMode::bilinear;
  double split_fraction = 0.8;
  std::size_t eval_samples = 64;

  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  std::size_t checkpoint_interval = 500;
  bool checkpoint_replay = true;
  std::size_t grid_samples = 4;

  EnvConfig env() const;
  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::size_t line, const std::string& message);
  /// 1-based source line, 0 when the problem is not tied to one line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// key=value lines; '#' starts a comment; blank lines are ignored.
RunConfig parse_config(const std::string& text);
/// Throws ConfigError when an invariant is violated.
void validate_config(const RunConfig& cfg);
/// Every effective value, one key per line, in a form parse_config accepts.
std::string format_config(const RunConfig& cfg);

std::string to_string(DatasetKind kind);
std::string to_string(RewardKind kind);
std::string to_string(RewardMode mode);
std::string to_string(OptimizerKind kind);
std::string to_string(Activation kind);
std::string to_string(ResizeMode mode);

}  // namespace saec
