#include "saec/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "saec/metrics.hpp"
#include "saec/ops.hpp"
#include "saec/random.hpp"

namespace saec {

Tensor center_mask(std::size_t height, std::size_t width) {
  std::vector<double> m(height * width, 0.0);
  const std::size_t y0 = height / 4, x0 = width / 4;
  for (std::size_t y = y0; y < y0 + height / 2; ++y) {
    for (std::size_t x = x0; x < x0 + width / 2; ++x) m[y * width + x] = 1.0;
  }
  return Tensor::from({1, height, width}, std::move(m));
}

Sample make_synthetic_sample(SyntheticKind kind, std::size_t channels, std::size_t height,
                             std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::vector<double> gains(channels);
  for (auto& g : gains) g = channels == 1 ? 1.0 : uniform(0.6, 1.0);

  std::vector<double> base(height * width);
  switch (kind) {
    case SyntheticKind::stripes: {
      const double theta = uniform(0.0, std::numbers::pi);
      const double period = uniform(6.0, 14.0);
      const double phase = uniform(0.0, 2.0 * std::numbers::pi);
      const double c = std::cos(theta), s = std::sin(theta);
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const double u = static_cast<double>(x) * c + static_cast<double>(y) * s;
          base[y * width + x] = 0.8 * std::sin(2.0 * std::numbers::pi * u / period + phase);
        }
      }
      break;
    }
    case SyntheticKind::blobs: {
      std::fill(base.begin(), base.end(), 0.0);
      for (int b = 0; b < 4; ++b) {
        const double cy = uniform(0.0, static_cast<double>(height));
        const double cx = uniform(0.0, static_cast<double>(width));
        const double sigma = uniform(3.0, 8.0) * static_cast<double>(std::max(height, width)) / 32.0;
        const double weight = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.5, 1.5);
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t x = 0; x < width; ++x) {
            const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
            base[y * width + x] += weight * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          }
        }
      }
      for (auto& v : base) v = std::tanh(v);
      break;
    }
    case SyntheticKind::gradients: {
      const double a = uniform(-2.0, 2.0), b = uniform(-2.0, 2.0), off = uniform(-0.3, 0.3);
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const double u = static_cast<double>(x) / static_cast<double>(width) - 0.5;
          const double v = static_cast<double>(y) / static_cast<double>(height) - 0.5;
          base[y * width + x] = std::clamp(a * u + b * v + off, -1.0, 1.0);
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("unknown synthetic sample kind");
  }
  std::vector<double> img(channels * height * width);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < base.size(); ++i) img[c * base.size() + i] = gains[c] * base[i];
  }
  return {Tensor::from({channels, height, width}, std::move(img)), center_mask(height, width)};
}

DataSource DataSource::synthetic(SyntheticKind kind, std::size_t channels, std::size_t height,
                                 std::size_t width, std::size_t test_count, std::uint64_t seed) {
  DataSource s;
  s.synthetic_ = true;
  s.kind_ = kind;
  s.channels_ = channels;
  s.height_ = height;
  s.width_ = width;
  s.synthetic_test_count_ = test_count;
  s.seed_ = seed;
  return s;
}

DataSource DataSource::from_images(std::vector<Tensor> images, double train_fraction, std::uint64_t seed) {
  DataSource s;
  if (images.empty()) return s;
  const Shape& shape = images.front().shape();
  for (const auto& im : images) {
    if (im.shape() != shape) throw ShapeError("data source images differ in shape");
  }
  s.channels_ = shape.at(0);
  s.height_ = shape.at(1);
  s.width_ = shape.at(2);
  s.seed_ = seed;
  s.images_ = std::move(images);

  const std::size_t n = s.images_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, {0x5b1f}));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = n;
  if (n >= 2) {
    const auto want = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(want, 1, n - 1);
  }
  s.train_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  if (s.test_.empty()) s.test_ = s.train_;
  return s;
}

std::size_t DataSource::test_count() const { return synthetic_ ? synthetic_test_count_ : test_.size(); }

Sample DataSource::draw(std::uint64_t seed) const {
  if (synthetic_) return make_synthetic_sample(kind_, channels_, height_, width_, seed);
  if (train_.empty()) throw EnvError("empty data source");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, train_.size() - 1);
  return {images_[train_[pick(rng)]], center_mask(height_, width_)};
}

Sample DataSource::test_sample(std::size_t index) const {
  if (index >= test_count()) throw std::out_of_range("test sample index out of range");
  if (synthetic_) {
    return make_synthetic_sample(kind_, channels_, height_, width_, derive_seed(seed_, {0x7e57, index}));
  }
  return {images_[test_[index]], center_mask(height_, width_)};
}

DataSource load_image_directory(const std::filesystem::path& dir, std::size_t channels,
                                std::size_t height, std::size_t width, ResizeMode resize,
                                double train_fraction, std::uint64_t seed) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw ImageIoError("unreadable directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw ImageIoError("unreadable directory: " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<Tensor> images;
  for (const auto& f : files) {
    Tensor raw;
    try {
      raw = read_pnm(f);
    } catch (const ImageIoError&) {
      continue;
    }
    Tensor img = resize_image(convert_channels(raw, channels), height, width, resize);
    std::vector<double> v(img.data().begin(), img.data().end());
    for (auto& x : v) x = 2.0 * x - 1.0;
    images.push_back(Tensor::from(img.shape(), std::move(v)));
  }
  if (images.empty()) throw ImageIoError("no decodable images in " + dir.string());
  return DataSource::from_images(std::move(images), train_fraction, seed);
}

double reward_metric(RewardKind kind, const Tensor& image, const Tensor& target) {
  return kind == RewardKind::psnr ? psnr(image, target) : ssim(image, target);
}

ResetResult env_reset(const Sample& sample, const EnvConfig& cfg) {
  EnvState s;
  s.target = sample.image;
  s.mask = sample.mask;
  {
    NoGradGuard no_grad;
    Tensor fill = Tensor::full(sample.image.shape(), cfg.fill_value);
    s.current = compose_state(sample.image, fill, sample.mask);
  }
  s.t = 0;
  s.horizon = cfg.horizon;
  s.metric = reward_metric(cfg.reward, s.current, s.target);
  return {s, sample.image};
}

ResetResult env_reset(const DataSource& source, const EnvConfig& cfg, std::uint64_t seed) {
  if (source.empty()) throw EnvError("env_reset: empty data source");
  return env_reset(source.draw(seed), cfg);
}

Tensor compose_state(const Tensor& current, const Tensor& y_tilde, const Tensor& mask) {
  if (current.shape() != y_tilde.shape()) {
    throw ShapeError("compose_state: shape mismatch " + to_string(current.shape()) + " vs " +
                     to_string(y_tilde.shape()));
  }
  // Must broadcast to the image shape without growing it.
  if (broadcast_shape(current.shape(), mask.shape()) != current.shape()) {
    throw ShapeError("compose_state: mask " + to_string(mask.shape()) + " does not fit image " +
                     to_string(current.shape()));
  }
  return mask * y_tilde + (1.0 - mask) * current;
}

StepResult env_step(const EnvState& state, const Tensor& y_tilde, const EnvConfig& cfg) {
  if (state.t >= state.horizon) throw EnvError("env_step: episode already finished");
  Tensor action = y_tilde.shape() == state.current.shape() ? y_tilde : reshape(y_tilde, state.current.shape());
  StepResult r;
  r.next = state;
  {
    NoGradGuard no_grad;
    r.next.current = compose_state(state.current, action.detach(), state.mask);
  }
  r.next.t = state.t + 1;
  r.next.metric = reward_metric(cfg.reward, r.next.current, state.target);
  r.reward = cfg.mode == RewardMode::absolute ? r.next.metric : r.next.metric - state.metric;
  r.done = r.next.t == state.horizon;
  return r;
}

}  // namespace saec
