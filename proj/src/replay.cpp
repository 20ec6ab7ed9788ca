#include "saec/replay.hpp"

#include <cmath>
#include <random>

namespace saec {

namespace {

Tensor stack(const std::vector<Transition>& items, Tensor Transition::*field) {
  const Shape& inner = (items.front().*field).shape();
  Shape shape{items.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<double> values;
  values.reserve(saec::numel(shape));
  for (const auto& t : items) {
    const Tensor& v = t.*field;
    if (v.shape() != inner) throw ShapeError("stack_transitions: mixed shapes " + to_string(v.shape()));
    values.insert(values.end(), v.data().begin(), v.data().end());
  }
  return Tensor::from(std::move(shape), std::move(values));
}

}  // namespace

TransitionBatch stack_transitions(const std::vector<Transition>& items) {
  if (items.empty()) throw ReplayError("stack_transitions: empty batch");
  TransitionBatch b;
  b.y = stack(items, &Transition::y);
  b.x = stack(items, &Transition::x);
  b.z = stack(items, &Transition::z);
  b.x_next = stack(items, &Transition::x_next);
  b.mask = stack(items, &Transition::mask);
  std::vector<double> r, d;
  for (const auto& t : items) {
    r.push_back(t.reward);
    d.push_back(t.done ? 1.0 : 0.0);
  }
  b.reward = Tensor::from({items.size()}, std::move(r));
  b.done = Tensor::from({items.size()}, std::move(d));
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ReplayError("replay capacity must be positive");
  slots_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.reward)) throw ReplayError("non-finite reward");
  if (t.x.shape() != t.y.shape() || t.x_next.shape() != t.y.shape() || t.z.rank() != 1) {
    throw ReplayError("inconsistent transition shapes");
  }
  if (!slots_.empty()) {
    const Transition& ref = slots_.front();
    if (t.y.shape() != ref.y.shape() || t.z.shape() != ref.z.shape() || t.mask.shape() != ref.mask.shape()) {
      throw ReplayError("transition shape differs from buffer contents");
    }
  }
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
  } else {
    slots_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= slots_.size()) throw std::out_of_range("replay index out of range");
  const std::size_t start = slots_.size() < capacity_ ? 0 : cursor_;
  return slots_[(start + i) % slots_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, std::uint64_t seed) const {
  if (slots_.empty()) throw ReplayError("sample from empty replay buffer");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, std::uint64_t seed) const {
  std::vector<Transition> out;
  out.reserve(batch);
  for (auto i : sample_indices(batch, seed)) out.push_back(slots_[i]);
  return out;
}

void ReplayBuffer::restore(std::vector<Transition> slots, std::size_t cursor) {
  if (slots.size() > capacity_ || cursor >= capacity_ ||
      (slots.size() < capacity_ && cursor != slots.size() % capacity_)) {
    throw ReplayError("replay restore: inconsistent size/cursor");
  }
  slots_ = std::move(slots);
  cursor_ = cursor;
}

}  // namespace saec
