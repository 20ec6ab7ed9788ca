#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "saec/image_io.hpp"
#include "saec/tensor.hpp"

namespace saec {

/// One image in [-1, 1] ([C,H,W]) and its binary inpainting mask ([1,H,W],
/// 1 = region to synthesize).
struct Sample {
  Tensor image;
  Tensor mask;
};

enum class SyntheticKind { stripes, blobs, gradients };
enum class RewardKind { psnr, ssim };
enum class RewardMode { absolute, delta };

struct EnvConfig {
  std::size_t horizon = 3;
  RewardKind reward = RewardKind::psnr;
  RewardMode mode = RewardMode::absolute;
  double fill_value = 0.0;
};

/// Centered square of side H/2 x W/2.
Tensor center_mask(std::size_t height, std::size_t width);

Sample make_synthetic_sample(SyntheticKind kind, std::size_t channels, std::size_t height,
                             std::size_t width, std::uint64_t seed);

/// Where episodes come from: an unbounded procedural generator, or a fixed
/// list of images split into train and test parts.
class DataSource {
 public:
  static DataSource synthetic(SyntheticKind kind, std::size_t channels, std::size_t height,
                              std::size_t width, std::size_t test_count, std::uint64_t seed);
  /// images are [C,H,W] in [-1, 1], all of one shape.
  static DataSource from_images(std::vector<Tensor> images, double train_fraction, std::uint64_t seed);

  bool is_synthetic() const { return synthetic_; }
  /// Stored images (0 for a procedural source).
  std::size_t size() const { return images_.size(); }
  std::size_t test_count() const;
  bool empty() const { return !synthetic_ && images_.empty(); }

  Sample draw(std::uint64_t seed) const;
  Sample test_sample(std::size_t index) const;
  /// Stored image at index in load order.
  const Tensor& image(std::size_t index) const { return images_.at(index); }

 private:
  bool synthetic_ = false;
  SyntheticKind kind_ = SyntheticKind::stripes;
  std::size_t channels_ = 1, height_ = 0, width_ = 0;
  std::size_t synthetic_test_count_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Tensor> images_;
  std::vector<std::size_t> train_, test_;
};

/// Loads every decodable PNM file in a flat directory, in lexicographic
/// filename order, converted and resized to [channels,height,width] and
/// remapped to [-1, 1].
DataSource load_image_directory(const std::filesystem::path& dir, std::size_t channels,
                                std::size_t height, std::size_t width, ResizeMode resize,
                                double train_fraction, std::uint64_t seed);

struct EnvState {
  Tensor current;  // [C,H,W]
  Tensor target;   // [C,H,W]
  Tensor mask;     // [1,H,W]
  std::size_t t = 0;
  std::size_t horizon = 1;
  double metric = 0.0;  // reward metric of current against target
};

struct ResetResult {
  EnvState state;
  Tensor target;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
};

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

double reward_metric(RewardKind kind, const Tensor& image, const Tensor& target);

ResetResult env_reset(const DataSource& source, const EnvConfig& cfg, std::uint64_t seed);
/// Episode start from an explicit sample.
ResetResult env_reset(const Sample& sample, const EnvConfig& cfg);

/// next = mask * y_tilde + (1 - mask) * current; differentiable, and
/// broadcasts a single-channel mask over channels.
Tensor compose_state(const Tensor& current, const Tensor& y_tilde, const Tensor& mask);

StepResult env_step(const EnvState& state, const Tensor& y_tilde, const EnvConfig& cfg);

}  // namespace saec
