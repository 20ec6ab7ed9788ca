#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "saec/tensor.hpp"

namespace saec {

/// Named trainable tensors in insertion order.
class ParamSet {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor tensor);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  void zero_grad();
  /// Allocates zero gradients where none exist yet.
  void ensure_grads();
  /// Deep copy; the copy's tensors require gradients.
  ParamSet clone() const;
  /// Deep copy without gradient tracking (frozen for stop-gradient use).
  ParamSet detached() const;
  bool same_layout(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;
  bool is_bias = false;
};
using ArchitectureSpec = std::vector<ParamSpec>;

/// Weights ~ U(-b, b) with b = sqrt(1/fan_in); biases zero.
ParamSet init_params(const ArchitectureSpec& spec, std::uint64_t seed);

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  OptimizerConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(const ParamSet& params, const OptimizerConfig& config);

/// One bias-corrected adaptive-moment step (or a plain gradient step in sgd
/// mode). Gradients are left untouched.
void optimizer_step(ParamSet& params, OptimizerState& state);

/// target <- tau * online + (1 - tau) * target
void ema_update(ParamSet& target, const ParamSet& online, double tau);

}  // namespace saec
