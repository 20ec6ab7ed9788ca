#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "saec/tensor.hpp"

namespace saec {

/// One interaction tuple. Images are [C,H,W], z is [z_dim], mask is [1,H,W].
struct Transition {
  Tensor y;
  Tensor x;
  Tensor z;
  double reward = 0.0;
  Tensor x_next;
  bool done = false;
  Tensor mask;
};

/// Transitions stacked along a new leading batch axis.
struct TransitionBatch {
  Tensor y;       // [B,C,H,W]
  Tensor x;       // [B,C,H,W]
  Tensor z;       // [B,z_dim]
  Tensor reward;  // [B]
  Tensor x_next;  // [B,C,H,W]
  Tensor done;    // [B], 1 for terminal
  Tensor mask;    // [B,1,H,W]
  std::size_t size() const { return reward.numel(); }
};

TransitionBatch stack_transitions(const std::vector<Transition>& items);

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity FIFO ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  /// Next slot to be overwritten once full.
  std::size_t cursor() const { return cursor_; }

  /// Throws ReplayError on a non-finite reward or inconsistent shapes.
  void push(Transition t);
  /// i-th transition, oldest first.
  const Transition& at(std::size_t i) const;

  /// Slot indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, std::uint64_t seed) const;
  std::vector<Transition> sample(std::size_t batch, std::uint64_t seed) const;

  /// Raw slot storage, for checkpointing.
  const std::vector<Transition>& slots() const { return slots_; }
  void restore(std::vector<Transition> slots, std::size_t cursor);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace saec
